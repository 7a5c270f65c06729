//! Ambient grids and level sets of the studied cases.

use serde::{Deserialize, Serialize};

use super::config::GeometrySpec;
use crate::error::{Error, Result};
use crate::levelset::Shape;
use crate::mesh::AmbientGrid;
use crate::scalar::Point;

/// Channel-with-cylinder data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurekData {
    pub height: f64,
    pub length: f64,
    pub radius: f64,
    pub center: Point<f64>,
    /// Peak inflow velocity.
    pub u_max: f64,
    pub base_cells: [usize; 2],
    /// Uniform cells of size `h_cylinder` around the cylinder, per direction.
    pub core_cells: [usize; 2],
    pub h_cylinder: f64,
}

impl Default for TurekData {
    fn default() -> Self {
        Self {
            height: 0.41,
            length: 2.2,
            radius: 0.05,
            center: [0.2, 0.2],
            u_max: 0.3,
            base_cells: [36, 22],
            core_cells: [8, 8],
            h_cylinder: 1.0 / 70.0,
        }
    }
}

impl TurekData {
    pub fn mean_velocity(&self) -> f64 {
        2.0 / 3.0 * self.u_max
    }

    pub fn reynolds(&self, viscosity: f64) -> f64 {
        2.0 * self.mean_velocity() * self.radius / viscosity
    }

    /// `rho U^2 R` with unit density.
    pub fn force_scale(&self) -> f64 {
        self.mean_velocity().powi(2) * self.radius
    }

    pub fn inflow(&self, y: f64) -> f64 {
        4.0 * self.u_max * y * (self.height - y) / (self.height * self.height)
    }

    /// Pressure probes in front of and behind the cylinder.
    pub fn probes(&self) -> [Point<f64>; 2] {
        let [cx, cy] = self.center;
        [[cx - self.radius, cy], [cx + self.radius, cy]]
    }

    pub fn validate(&self) -> Result<()> {
        let [cx, cy] = self.center;
        let r = self.radius;
        if !(r > 0.0 && cx - r > 0.0 && cx + r < self.length && cy - r > 0.0 && cy + r < self.height) {
            return Err(Error::Config("cylinder must lie inside the channel".into()));
        }
        for d in 0..2 {
            if self.core_cells[d] == 0 || self.core_cells[d] + 2 > self.base_cells[d] {
                return Err(Error::Config("core cells must leave room on both sides".into()));
            }
        }
        if !(self.h_cylinder > 0.0) || self.core_cells[0] as f64 * self.h_cylinder < 2.0 * r {
            return Err(Error::Config("the uniform core must cover the cylinder".into()));
        }
        Ok(())
    }

    /// Base grid: a uniform core of `h_cylinder` cells centered on the
    /// cylinder, geometric growth toward the channel ends.
    pub fn base_grid(&self) -> Result<AmbientGrid<f64>> {
        let x = graded_breakpoints(self.length, self.center[0], self.base_cells[0], self.core_cells[0], self.h_cylinder)?;
        let y = graded_breakpoints(self.height, self.center[1], self.base_cells[1], self.core_cells[1], self.h_cylinder)?;
        AmbientGrid::from_breakpoints(x, y)
    }
}

/// Growth ratio `r` with `h * (r + r^2 + ... + r^m) = len`.
fn growth_ratio(h: f64, m: usize, len: f64) -> f64 {
    let total = |r: f64| h * (1..=m).map(|i| r.powi(i as i32)).sum::<f64>();
    let (mut lo, mut hi) = (1e-3, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Breakpoints on `[0, length]` with `core` cells of size `h` centered on `c`
/// and geometrically growing cells on either side. The split of the remaining
/// cells minimizes the larger of the two growth ratios.
pub fn graded_breakpoints(length: f64, c: f64, cells: usize, core: usize, h: f64) -> Result<Vec<f64>> {
    let half = 0.5 * core as f64 * h;
    let (left, right) = (c - half, length - c - half);
    if !(left > 0.0 && right > 0.0) || cells < core + 2 {
        return Err(Error::Config(format!("cannot grade {cells} cells around {c} in [0, {length}]")));
    }
    let rest = cells - core;
    let (nl, rl, rr) = (1..rest)
        .map(|nl| (nl, growth_ratio(h, nl, left), growth_ratio(h, rest - nl, right)))
        .min_by(|a, b| a.1.max(a.2).total_cmp(&b.1.max(b.2)))
        .expect("at least one split");
    let mut b = Vec::with_capacity(cells + 1);
    // left side, walking from the core outward, then reversed
    let mut x = c - half;
    let mut side = vec![x];
    for i in 1..=nl {
        x -= h * rl.powi(i as i32);
        side.push(x);
    }
    side.reverse();
    side[0] = 0.0;
    b.extend(side);
    for i in 1..=core {
        b.push(c - half + i as f64 * h);
    }
    let mut x = c + half;
    for i in 1..=rest - nl {
        x += h * rr.powi(i as i32);
        b.push(x);
    }
    *b.last_mut().unwrap() = length;
    Ok(b)
}

/// Level set, ambient grid and nominal mesh size for one study entry.
pub fn discretize(spec: &GeometrySpec, mesh: usize) -> Result<(Shape<f64>, AmbientGrid<f64>, f64)> {
    match spec {
        GeometrySpec::QuarterAnnulus {
            r_inner,
            r_outer,
            offset,
            extent,
        } => {
            let shape = Shape::QuarterAnnulus {
                r_inner: *r_inner,
                r_outer: *r_outer,
            };
            let grid = AmbientGrid::uniform([-offset, -offset], [extent - offset, extent - offset], [mesh, mesh])?;
            Ok((shape, grid, extent / mesh as f64))
        }
        GeometrySpec::Sliver { r_inner, r_outer, size } => {
            let h = size / mesh as f64;
            let d = sliver_offset(*size, mesh);
            let shape = Shape::QuarterAnnulus {
                r_inner: *r_inner,
                r_outer: *r_outer,
            };
            let grid = AmbientGrid::uniform([-d, -d], [size - d, size - d], [mesh, mesh])?;
            Ok((shape, grid, h))
        }
        GeometrySpec::SquareCylinder { radius } => {
            let shape = Shape::DiskComplement {
                center: [0.5, 0.5],
                radius: *radius,
            };
            let grid = AmbientGrid::uniform([0.0, 0.0], [1.0, 1.0], [mesh, mesh])?;
            Ok((shape, grid, 1.0 / mesh as f64))
        }
        GeometrySpec::Turek(t) => {
            let shape = Shape::ChannelWithCylinder {
                length: t.length,
                height: t.height,
                center: t.center,
                radius: t.radius,
            };
            let factor = 1usize << mesh;
            Ok((shape, t.base_grid()?.refined(factor), t.h_cylinder / factor as f64))
        }
    }
}

/// Offset `d = h - 1/n^2` of the sliver ambient box `[-d, size - d]^2`.
pub fn sliver_offset(size: f64, n: usize) -> f64 {
    size / n as f64 - 1.0 / (n * n) as f64
}
