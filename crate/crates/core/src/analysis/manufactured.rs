//! Manufactured flows with forcing derived from the strong form.

use serde::{Deserialize, Serialize};

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::scalar::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManufacturedName {
    /// Polynomial-exponential flow in the annulus `1 < r < 4`, first quadrant.
    QuarterAnnulus,
    /// Flow in the unit square around a cylinder of radius 1/8.
    SquareCylinder,
}

impl std::str::FromStr for ManufacturedName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quarter_annulus" => Ok(Self::QuarterAnnulus),
            "square_cylinder" => Ok(Self::SquareCylinder),
            other => Err(Error::UnknownSolution(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub name: ManufacturedName,
    pub viscosity: f64,
    /// Include `div(u u)` in the forcing.
    pub convection: bool,
}

type J = Jet<f64>;

fn fields(name: ManufacturedName, x: J, y: J) -> ([J; 2], J) {
    match name {
        ManufacturedName::QuarterAnnulus => {
            let r2 = x * x + y * y;
            let a = r2 - 1.0;
            let b = r2 - 16.0;
            let (x2, y2) = (x * x, y * y);
            let u1 = x2 * y2 * y2 * a * b
                * (x2 * x2 * 5.0 + x2 * y2 * 18.0 - x2 * 85.0 + y2 * y2 * 13.0 - y2 * 153.0 + 80.0)
                * 1e-6;
            let u2 = x * y2 * y2 * y * a * b
                * (x2 * 102.0 + y2 * 34.0 - x2 * x2 * 10.0 - x2 * y2 * 12.0 - y2 * y2 * 2.0 - 32.0)
                * 1e-6;
            let p = x * y * (y2 - x2) * b * b * a * a * (r2.sqrt().recip() * 14.0).exp() * 1e-7;
            ([u1, u2], p)
        }
        ManufacturedName::SquareCylinder => {
            let ex = x.exp();
            let s = y * y - y;
            let xm = x - 1.0;
            let u1 = ex * xm * xm * x * x * s * (y * 2.0 - 1.0) * 2.0;
            let ym = y - 1.0;
            let u2 = -(ex * xm * x * (x * (x + 3.0) - 2.0) * ym * ym * y * y);
            let e = std::f64::consts::E;
            let inner = (x * x * (-(s * 5.0) + 228.0)) + (x * (s - 228.0) * 2.0) + (x * x * x * (s - 36.0) * 2.0) + (x * x * x * x * (s + 12.0));
            let p = s * (ex * (inner + 456.0) - 456.0) + (156.0 * e - 424.0);
            ([u1, u2], p)
        }
    }
}

impl ManufacturedSolution {
    pub fn new(name: ManufacturedName, viscosity: f64, convection: bool) -> Self {
        Self {
            name,
            viscosity,
            convection,
        }
    }

    fn jets(&self, p: Point<f64>) -> ([J; 2], J) {
        fields(self.name, Jet::variable(p[0], 0), Jet::variable(p[1], 1))
    }

    pub fn velocity(&self, p: Point<f64>) -> [f64; 2] {
        let (u, _) = self.jets(p);
        [u[0].v, u[1].v]
    }

    /// `grad[i][j] = d u_i / d x_j`.
    pub fn velocity_gradient(&self, p: Point<f64>) -> [[f64; 2]; 2] {
        let (u, _) = self.jets(p);
        [u[0].g, u[1].g]
    }

    pub fn pressure(&self, p: Point<f64>) -> f64 {
        self.jets(p).1.v
    }

    pub fn pressure_gradient(&self, p: Point<f64>) -> [f64; 2] {
        self.jets(p).1.g
    }

    /// Cauchy stress `2 mu sym(grad u) - p I`.
    pub fn stress(&self, p: Point<f64>) -> [[f64; 2]; 2] {
        let g = self.velocity_gradient(p);
        let pr = self.pressure(p);
        let mu = self.viscosity;
        [
            [2.0 * mu * g[0][0] - pr, mu * (g[0][1] + g[1][0])],
            [mu * (g[0][1] + g[1][0]), 2.0 * mu * g[1][1] - pr],
        ]
    }

    /// `div(u u) - div(2 mu sym(grad u)) + grad p`.
    pub fn body_force(&self, p: Point<f64>) -> [f64; 2] {
        let (u, pr) = self.jets(p);
        let mu = self.viscosity;
        let div = u[0].g[0] + u[1].g[1];
        let mut f = [0.0; 2];
        for i in 0..2 {
            // div(2 sym grad u)_i = lap u_i + d_i div u
            let visc = u[i].laplacian() + u[0].h[0][i] + u[1].h[1][i];
            f[i] = -mu * visc + pr.g[i];
            if self.convection {
                f[i] += u[0].v * u[i].g[0] + u[1].v * u[i].g[1] + u[i].v * div;
            }
        }
        f
    }
}
