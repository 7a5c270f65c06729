//! Error norms against exact fields and observed convergence rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manufactured::ManufacturedSolution;
use crate::error::{Error, Result};
use crate::immersion::CutQuadrature;
use crate::mesh::CellClass;
use crate::scalar::Point;
use crate::weakform::{FlowSolution, Space};

/// Exact velocity and pressure fields.
pub trait ExactFlow: Sync {
    fn velocity(&self, p: Point<f64>) -> [f64; 2];
    /// `grad[i][j] = d u_i / d x_j`.
    fn velocity_gradient(&self, p: Point<f64>) -> [[f64; 2]; 2];
    fn pressure(&self, p: Point<f64>) -> f64;
}

impl ExactFlow for ManufacturedSolution {
    fn velocity(&self, p: Point<f64>) -> [f64; 2] {
        ManufacturedSolution::velocity(self, p)
    }
    fn velocity_gradient(&self, p: Point<f64>) -> [[f64; 2]; 2] {
        ManufacturedSolution::velocity_gradient(self, p)
    }
    fn pressure(&self, p: Point<f64>) -> f64 {
        ManufacturedSolution::pressure(self, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub velocity_l2: f64,
    pub velocity_h1: f64,
    pub pressure_l2: f64,
}

/// Per-point discrete and exact values, integrated cell by cell.
struct Sample {
    w: f64,
    du: [f64; 2],
    dg: [[f64; 2]; 2],
    ph: f64,
    pe: f64,
}

fn samples(space: &Space<f64>, sol: &FlowSolution<f64>, exact: &dyn ExactFlow, quad: &CutQuadrature<f64>, pos: usize) -> Vec<Sample> {
    let (ij, dofs) = space.cell_dofs(pos);
    let n = space.n();
    quad.cells[pos]
        .volume
        .iter()
        .map(|&(p, w)| {
            let ev = space.basis.eval_on_cell(ij, p, 1);
            let mut u = [0.0; 2];
            let mut g = [[0.0; 2]; 2];
            let mut ph = 0.0;
            for (l, &d) in dofs.iter().enumerate() {
                let (v, gl) = (ev.value(l), ev.grad(l));
                for c in 0..2 {
                    let coef = sol.uhat[d + c * n];
                    u[c] += coef * v;
                    g[c][0] += coef * gl[0];
                    g[c][1] += coef * gl[1];
                }
                ph += sol.phat[d] * v;
            }
            let ue = exact.velocity(p);
            let ge = exact.velocity_gradient(p);
            Sample {
                w,
                du: [u[0] - ue[0], u[1] - ue[1]],
                dg: [
                    [g[0][0] - ge[0][0], g[0][1] - ge[0][1]],
                    [g[1][0] - ge[1][0], g[1][1] - ge[1][1]],
                ],
                ph,
                pe: exact.pressure(p),
            }
        })
        .collect()
}

/// L2 and H1-seminorm velocity errors and L2 pressure error over the cut
/// quadrature. With `mean_zero` both pressures are shifted to zero mean first.
pub fn error_norms(
    space: &Space<f64>,
    sol: &FlowSolution<f64>,
    exact: &dyn ExactFlow,
    quad: &CutQuadrature<f64>,
    mean_zero: bool,
) -> Result<ErrorNorms> {
    let cells = space.mesh.active_cells().len();
    if quad.cells.len() != cells {
        return Err(Error::MissingQuadrature(quad.cells.len().min(cells)));
    }
    let per_cell: Vec<Vec<Sample>> = (0..cells)
        .into_par_iter()
        .map(|pos| samples(space, sol, exact, quad, pos))
        .collect();
    let (mut area, mut mh, mut me) = (0.0, 0.0, 0.0);
    for s in per_cell.iter().flatten() {
        area += s.w;
        mh += s.w * s.ph;
        me += s.w * s.pe;
    }
    let shift = if mean_zero && area > 0.0 { (me - mh) / area } else { 0.0 };
    let (mut l2, mut h1, mut pl2) = (0.0, 0.0, 0.0);
    for s in per_cell.iter().flatten() {
        l2 += s.w * (s.du[0].powi(2) + s.du[1].powi(2));
        h1 += s.w * s.dg.iter().flatten().map(|v| v * v).sum::<f64>();
        pl2 += s.w * (s.ph + shift - s.pe).powi(2);
    }
    Ok(ErrorNorms {
        velocity_l2: l2.sqrt(),
        velocity_h1: h1.sqrt(),
        pressure_l2: pl2.sqrt(),
    })
}

/// Largest `|p_h|` over the volume quadrature points of cut and of interior cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureBounds {
    pub max_cut: f64,
    pub max_interior: f64,
}

pub fn pressure_bounds(space: &Space<f64>, sol: &FlowSolution<f64>, quad: &CutQuadrature<f64>) -> PressureBounds {
    let mut b = PressureBounds {
        max_cut: 0.0,
        max_interior: 0.0,
    };
    for (pos, cq) in quad.cells.iter().enumerate() {
        let (ij, dofs) = space.cell_dofs(pos);
        let cut = space.mesh.class(space.mesh.active_cells()[pos]) == CellClass::Cut;
        let slot = if cut { &mut b.max_cut } else { &mut b.max_interior };
        for &(p, _) in &cq.volume {
            let ev = space.basis.eval_on_cell(ij, p, 0);
            let v: f64 = dofs.iter().enumerate().map(|(l, &d)| sol.phat[d] * ev.value(l)).sum();
            *slot = slot.max(v.abs());
        }
    }
    b
}

/// Observed orders of a sequence of errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Slopes between consecutive rows.
    pub pairwise: Vec<f64>,
    /// Least-squares slope of `log e` over `log h` on the last `min(3, rows)` rows.
    pub least_squares: f64,
}

pub fn convergence_rates(h: &[f64], errors: &[f64]) -> Result<Rates> {
    if h.len() != errors.len() {
        return Err(Error::LengthMismatch {
            expected: h.len(),
            got: errors.len(),
        });
    }
    if h.len() < 2 {
        return Err(Error::TooFewRows);
    }
    if let Some(&e) = errors.iter().chain(h).find(|&&e| !(e > 0.0)) {
        return Err(Error::NonPositiveError(e));
    }
    let pairwise = h
        .windows(2)
        .zip(errors.windows(2))
        .map(|(hh, ee)| (ee[0] / ee[1]).ln() / (hh[0] / hh[1]).ln())
        .collect();
    let m = h.len().min(3);
    let xs: Vec<f64> = h[h.len() - m..].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors[h.len() - m..].iter().map(|v| v.ln()).collect();
    Ok(Rates {
        pairwise,
        least_squares: least_squares_slope(&xs, &ys),
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
