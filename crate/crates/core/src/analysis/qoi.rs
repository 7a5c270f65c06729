//! Drag and lift from the weak residual, and point pressure differences.

use serde::{Deserialize, Serialize};

use super::norms::ExactFlow;
use crate::error::{Error, Result};
use crate::gauss::gauss_legendre;
use crate::immersion::CutQuadrature;
use crate::levelset::{LevelSet, Region};
use crate::scalar::Point;
use crate::weakform::{assemble_convection, BoundaryKind, FlowSolution, PhysicalSetup, Space, SystemBlocks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoiConfig {
    /// Boundary on which the force is measured.
    pub target_region: Region,
    /// `rho * U^2 * R`.
    pub normalization: f64,
    /// Pressure-drop probes `(p1, p2)`.
    #[serde(default)]
    pub probes: Option<[Point<f64>; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragLift {
    pub force: [f64; 2],
    pub c_d: f64,
    pub c_l: f64,
}

impl DragLift {
    fn new(force: [f64; 2], normalization: f64) -> Self {
        Self {
            force,
            c_d: force[0] / normalization,
            c_l: force[1] / normalization,
        }
    }
}

/// Coefficients of the scalar extraction function: `-1` on every active
/// function that is nonzero on a facet of `target`, `0` elsewhere. Fails if
/// one of those functions is also nonzero on another Dirichlet facet.
pub fn extraction_coefficients(
    space: &Space<f64>,
    quad: &CutQuadrature<f64>,
    setup: &PhysicalSetup<f64>,
    target: Region,
) -> Result<Vec<f64>> {
    let n = space.n();
    let mut on_target = vec![false; n];
    let mut on_other = vec![false; n];
    for (pos, cq) in quad.cells.iter().enumerate() {
        let (ij, dofs) = space.cell_dofs(pos);
        for facet in &cq.facets {
            let region = facet.segment.region;
            let flags = if region == target {
                &mut on_target
            } else if setup.kind(region) == BoundaryKind::Dirichlet {
                &mut on_other
            } else {
                continue;
            };
            for &(p, _) in &facet.points {
                let ev = space.basis.eval_on_cell(ij, p, 0);
                for (l, &d) in dofs.iter().enumerate() {
                    if ev.value(l).abs() > 1e-14 {
                        flags[d] = true;
                    }
                }
            }
        }
    }
    if !on_target.iter().any(|&t| t) {
        return Err(Error::ExtractionOverlap(format!("no facet carries region {target}")));
    }
    if let Some(d) = (0..n).find(|&d| on_target[d] && on_other[d]) {
        return Err(Error::ExtractionOverlap(format!(
            "function {d} touches region {target} and another Dirichlet boundary"
        )));
    }
    Ok(on_target.iter().map(|&t| if t { -1.0 } else { 0.0 }).collect())
}

/// Velocity residual `(A_vol - N_sym + C(u)) u + g_sym + B_vol^T p - f`,
/// one entry per velocity test function.
pub fn residual_vector(blocks: &SystemBlocks<f64>, sol: &FlowSolution<f64>, convection: Option<&crate::sparse::CsrMatrix<f64>>) -> Result<Vec<f64>> {
    let mut r = blocks.a_volume.mul_vec(&sol.uhat)?;
    let ns = blocks.nitsche_sym.mul_vec(&sol.uhat)?;
    let bt = blocks.b_volume.transpose().mul_vec(&sol.phat)?;
    let cu = match convection {
        Some(c) => c.mul_vec(&sol.uhat)?,
        None => vec![0.0; r.len()],
    };
    for i in 0..r.len() {
        r[i] += cu[i] - ns[i] + blocks.g_sym[i] + bt[i] - blocks.f_body[i];
    }
    Ok(r)
}

/// Drag and lift as the assembled residual paired with the extraction field.
pub fn qoi_drag_lift(
    space: &Space<f64>,
    quad: &CutQuadrature<f64>,
    setup: &PhysicalSetup<f64>,
    blocks: &SystemBlocks<f64>,
    sol: &FlowSolution<f64>,
    cfg: &QoiConfig,
) -> Result<DragLift> {
    let ell = extraction_coefficients(space, quad, setup, cfg.target_region)?;
    let conv = if setup.convection {
        Some(assemble_convection(space, quad, &sol.uhat)?)
    } else {
        None
    };
    let r = residual_vector(blocks, sol, conv.as_ref())?;
    let n = space.n();
    let force = [0, 1].map(|c| ell.iter().zip(&r[c * n..(c + 1) * n]).map(|(l, v)| l * v).sum());
    Ok(DragLift::new(force, cfg.normalization))
}

/// The same functional integrated point by point, without assembled blocks.
pub fn drag_lift_by_quadrature(
    space: &Space<f64>,
    quad: &CutQuadrature<f64>,
    setup: &PhysicalSetup<f64>,
    sol: &FlowSolution<f64>,
    cfg: &QoiConfig,
) -> Result<DragLift> {
    let ell = extraction_coefficients(space, quad, setup, cfg.target_region)?;
    let n = space.n();
    let mu = setup.viscosity;
    let mut force = [0.0; 2];
    for (pos, cq) in quad.cells.iter().enumerate() {
        let (ij, dofs) = space.cell_dofs(pos);
        if dofs.iter().all(|&d| ell[d] == 0.0) {
            continue;
        }
        let fields = |p: Point<f64>| {
            let ev = space.basis.eval_on_cell(ij, p, 1);
            let (mut u, mut gu, mut pr, mut l, mut gl) = ([0.0; 2], [[0.0; 2]; 2], 0.0, 0.0, [0.0; 2]);
            for (k, &d) in dofs.iter().enumerate() {
                let (v, g) = (ev.value(k), ev.grad(k));
                for c in 0..2 {
                    u[c] += sol.uhat[d + c * n] * v;
                    gu[c][0] += sol.uhat[d + c * n] * g[0];
                    gu[c][1] += sol.uhat[d + c * n] * g[1];
                }
                pr += sol.phat[d] * v;
                l += ell[d] * v;
                gl[0] += ell[d] * g[0];
                gl[1] += ell[d] * g[1];
            }
            (u, gu, pr, l, gl)
        };
        for &(p, w) in &cq.volume {
            let (u, gu, pr, l, gl) = fields(p);
            let f = (setup.body_force)(p);
            for (i, fi) in force.iter_mut().enumerate() {
                // test field l e_i: grad = e_i (x) gl
                let mut s = 0.0;
                for j in 0..2 {
                    s += mu * (gu[i][j] + gu[j][i]) * gl[j];
                }
                if setup.convection {
                    s += (u[0] * gu[i][0] + u[1] * gu[i][1]) * l;
                }
                s -= pr * gl[i];
                s -= f[i] * l;
                *fi += w * s;
            }
        }
        for facet in &cq.facets {
            let seg = &facet.segment;
            if setup.kind(seg.region) != BoundaryKind::Dirichlet {
                continue;
            }
            let nrm = seg.normal;
            for &(p, w) in &facet.points {
                let (u, _, _, _, gl) = fields(p);
                let g = (setup.dirichlet)(p, seg.region);
                let e = [u[0] - g[0], u[1] - g[1]];
                let dn = gl[0] * nrm[0] + gl[1] * nrm[1];
                for (i, fi) in force.iter_mut().enumerate() {
                    // 2 mu sym(e_i (x) gl) n . e
                    let t = e[i] * dn + nrm[i] * (gl[0] * e[0] + gl[1] * e[1]);
                    *fi -= w * mu * t;
                }
            }
        }
    }
    Ok(DragLift::new(force, cfg.normalization))
}

/// Force exerted by an exact flow on a circular obstacle, by composite
/// Gauss-Legendre quadrature of the traction over `panels` arcs.
pub fn exact_force_on_circle(exact: &dyn ExactFlow, viscosity: f64, center: Point<f64>, radius: f64, panels: usize) -> [f64; 2] {
    let (nodes, weights) = gauss_legendre(8);
    let dt = std::f64::consts::TAU / panels as f64;
    let mut force = [0.0; 2];
    for k in 0..panels {
        for (x, w) in nodes.iter().zip(&weights) {
            let t = dt * (k as f64 + 0.5 * (x + 1.0));
            let nb = [t.cos(), t.sin()];
            let p = [center[0] + radius * nb[0], center[1] + radius * nb[1]];
            let g = exact.velocity_gradient(p);
            let pr = exact.pressure(p);
            for (i, fi) in force.iter_mut().enumerate() {
                let s: f64 = (0..2)
                    .map(|j| viscosity * (g[i][j] + g[j][i]) * nb[j] - if i == j { pr * nb[j] } else { 0.0 })
                    .sum();
                *fi += 0.5 * w * dt * radius * s;
            }
        }
    }
    force
}

/// Evaluates the pressure at a point of the closed physical domain. Points
/// within `1e-10` cell sizes of the boundary count as inside.
pub fn pressure_at(space: &Space<f64>, ls: &dyn LevelSet<f64>, sol: &FlowSolution<f64>, p: Point<f64>) -> Result<f64> {
    let pos = locate(space, p).ok_or(Error::OutOfDomain(p))?;
    let [hx, hy] = space.cell_size(pos);
    if !(ls.value(p) >= -1e-10 * hx.min(hy)) {
        return Err(Error::OutOfDomain(p));
    }
    sol.pressure(space, p)
}

/// `p(p1) - p(p2)`.
pub fn pressure_drop(space: &Space<f64>, ls: &dyn LevelSet<f64>, sol: &FlowSolution<f64>, p1: Point<f64>, p2: Point<f64>) -> Result<f64> {
    Ok(pressure_at(space, ls, sol, p1)? - pressure_at(space, ls, sol, p2)?)
}

/// Active-cell position containing `p`.
pub fn locate(space: &Space<f64>, p: Point<f64>) -> Option<usize> {
    let i = space.basis.dir(0).find_element(p[0]).ok()?;
    let j = space.basis.dir(1).find_element(p[1]).ok()?;
    space.mesh.active_position(space.mesh.grid().cell_index([i, j]))
}
