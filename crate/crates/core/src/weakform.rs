//! Assembly of the Nitsche/skeleton-stabilized equal-order Stokes system.
//!
//! Scalar spline functions are numbered compactly over the background mesh
//! (`n` of them). Velocity unknown `j + d * n` is function `j` times the unit
//! vector `e_d`; pressure unknown `j` is function `j`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::UnitRule;
use crate::immersion::{BoundarySegment, CutQuadrature};
use crate::levelset::Region;
use crate::mesh::{ActiveFunctions, BackgroundMesh, Face};
use crate::scalar::{Point, Scalar};
use crate::sparse::{CsrMatrix, Triplets};
use crate::splines::{KnotVector, LocalBasisEval, TensorBSplineBasis};

const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizationParams<T> {
    pub beta: T,
    pub gamma: T,
    pub gamma_tilde: T,
}

impl<T: Scalar> StabilizationParams<T> {
    /// Defaults for degree `k`: `beta = 6 (k+1)^2`, `gamma` per degree,
    /// `gamma_tilde = 10^(-k-1)`.
    pub fn recommended(k: usize) -> Self {
        let gamma = match k {
            1 => 10.0,
            2 => 0.1,
            _ => 5e-4,
        };
        Self {
            beta: T::lit(6.0 * ((k + 1) * (k + 1)) as f64),
            gamma: T::lit(gamma),
            gamma_tilde: T::lit(10f64.powi(-(k as i32) - 1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

pub type VectorField<T> = Arc<dyn Fn(Point<T>) -> [T; 2] + Send + Sync>;
/// Boundary data evaluated at a point of a given region.
pub type BoundaryField<T> = Arc<dyn Fn(Point<T>, Region) -> [T; 2] + Send + Sync>;
/// Traction as a function of point and outward normal.
pub type TractionField<T> = Arc<dyn Fn(Point<T>, Point<T>) -> [T; 2] + Send + Sync>;

#[derive(Clone)]
pub struct PhysicalSetup<T> {
    pub viscosity: T,
    pub body_force: VectorField<T>,
    pub dirichlet: BoundaryField<T>,
    pub neumann: TractionField<T>,
    /// Regions carrying traction data; every other region is Dirichlet.
    pub neumann_regions: Vec<Region>,
    pub convection: bool,
    pub pressure_mean_zero: bool,
}

impl<T: Scalar> PhysicalSetup<T> {
    /// No forcing, homogeneous Dirichlet data everywhere.
    pub fn homogeneous(viscosity: T) -> Self {
        Self {
            viscosity,
            body_force: Arc::new(|_| [T::zero(); 2]),
            dirichlet: Arc::new(|_, _| [T::zero(); 2]),
            neumann: Arc::new(|_, _| [T::zero(); 2]),
            neumann_regions: Vec::new(),
            convection: false,
            pressure_mean_zero: true,
        }
    }

    pub fn kind(&self, region: Region) -> BoundaryKind {
        if self.neumann_regions.contains(&region) {
            BoundaryKind::Neumann
        } else {
            BoundaryKind::Dirichlet
        }
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for PhysicalSetup<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhysicalSetup")
            .field("viscosity", &self.viscosity)
            .field("neumann_regions", &self.neumann_regions)
            .field("convection", &self.convection)
            .field("pressure_mean_zero", &self.pressure_mean_zero)
            .finish_non_exhaustive()
    }
}

/// Spline space restricted to the background mesh.
#[derive(Debug, Clone)]
pub struct Space<T> {
    pub basis: TensorBSplineBasis<T>,
    pub mesh: BackgroundMesh<T>,
    pub active: ActiveFunctions,
}

impl<T: Scalar> Space<T> {
    pub fn new(mesh: BackgroundMesh<T>, degree: usize) -> Result<Self> {
        let basis = mesh.grid().basis(degree)?;
        let active = mesh.active_functions(&basis);
        Ok(Self { basis, mesh, active })
    }

    /// Number of active scalar functions.
    pub fn n(&self) -> usize {
        self.active.len()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// Tensor cell index and compact ids of the functions living on the
    /// active cell at position `pos`.
    pub fn cell_dofs(&self, pos: usize) -> ([usize; 2], Vec<usize>) {
        let c = self.mesh.active_cells()[pos];
        let ij = self.mesh.grid().cell_ij(c);
        let k = self.degree();
        let mut dofs = Vec::with_capacity((k + 1) * (k + 1));
        for lj in 0..=k {
            for li in 0..=k {
                let g = self.basis.global_index([ij[0] + li, ij[1] + lj]);
                dofs.push(self.active.compact(g).expect("function of an active cell is active"));
            }
        }
        (ij, dofs)
    }

    pub fn cell_size(&self, pos: usize) -> [T; 2] {
        let [i, j] = self.mesh.grid().cell_ij(self.mesh.active_cells()[pos]);
        [self.mesh.grid().spacing(0, i), self.mesh.grid().spacing(1, j)]
    }

    /// Mesh size used in the Nitsche penalty of a boundary segment.
    pub fn nitsche_h(&self, pos: usize, seg: &BoundarySegment<T>) -> T {
        let h = self.cell_size(pos);
        if seg.conforming {
            if seg.normal[0].abs() > seg.normal[1].abs() { h[0] } else { h[1] }
        } else {
            h[0].min(h[1])
        }
    }

    /// Compact ids and values of the k-th normal-derivative jump on `face`.
    fn face_jump(&self, face: &Face<T>, t: T) -> (Vec<usize>, Vec<T>) {
        let jump = self
            .basis
            .kth_normal_jump(face.knot, t)
            .expect("skeleton faces are interior");
        let ids = jump
            .functions
            .iter()
            .map(|&g| self.active.compact(g).expect("face function is active"))
            .collect();
        (ids, jump.values)
    }

    /// Evaluates the compactly numbered scalar field `coeffs` and its gradient.
    pub fn eval_scalar(&self, coeffs: &[T], p: Point<T>) -> Result<(T, [T; 2])> {
        let ev = self.basis.eval(p, 1)?;
        let (mut v, mut g) = (T::zero(), [T::zero(); 2]);
        for l in 0..ev.len() {
            if let Some(i) = self.active.compact(self.basis.global_index(ev.tensor_index(l))) {
                let c = coeffs[i];
                v += c * ev.value(l);
                let gl = ev.grad(l);
                g[0] += c * gl[0];
                g[1] += c * gl[1];
            }
        }
        Ok((v, g))
    }
}

/// Discrete velocity and pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution<T> {
    pub uhat: Vec<T>,
    pub phat: Vec<T>,
    pub lambda: Option<T>,
}

impl<T: Scalar> FlowSolution<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            uhat: vec![T::zero(); 2 * n],
            phat: vec![T::zero(); n],
            lambda: None,
        }
    }

    pub fn n(&self) -> usize {
        self.phat.len()
    }

    pub fn velocity_component(&self, d: usize) -> &[T] {
        let n = self.n();
        &self.uhat[d * n..(d + 1) * n]
    }

    pub fn velocity(&self, space: &Space<T>, p: Point<T>) -> Result<[T; 2]> {
        Ok([
            space.eval_scalar(self.velocity_component(0), p)?.0,
            space.eval_scalar(self.velocity_component(1), p)?.0,
        ])
    }

    /// `grad[i][j] = d u_i / d x_j`.
    pub fn velocity_gradient(&self, space: &Space<T>, p: Point<T>) -> Result<[[T; 2]; 2]> {
        Ok([
            space.eval_scalar(self.velocity_component(0), p)?.1,
            space.eval_scalar(self.velocity_component(1), p)?.1,
        ])
    }

    pub fn pressure(&self, space: &Space<T>, p: Point<T>) -> Result<T> {
        Ok(space.eval_scalar(&self.phat, p)?.0)
    }
}

/// All blocks of the saddle-point system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemBlocks<T> {
    pub n: usize,
    /// Viscous block with Nitsche terms, `2n x 2n`.
    pub a: CsrMatrix<T>,
    /// Plain volume viscous form.
    pub a_volume: CsrMatrix<T>,
    /// `mu <(d_n N_a delta + n_alpha d_beta N_a), N_b>` on Dirichlet facets;
    /// row is the test function.
    pub nitsche_sym: CsrMatrix<T>,
    /// Divergence block with boundary term, `n x 2n`.
    pub b: CsrMatrix<T>,
    /// Plain volume divergence form.
    pub b_volume: CsrMatrix<T>,
    pub s_ghost: CsrMatrix<T>,
    pub s_skel: CsrMatrix<T>,
    pub mass: CsrMatrix<T>,
    pub m_pp: CsrMatrix<T>,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
    /// Body-force load alone.
    pub f_body: Vec<T>,
    /// Dirichlet data paired with the symmetric Nitsche term.
    pub g_sym: Vec<T>,
    pub mean: Vec<T>,
}

/// Output of the per-item kernels of one chunk.
struct Chunk<T> {
    mats: Vec<Triplets<T>>,
    vecs: Vec<Vec<(u32, T)>>,
}

/// Runs `kernel` on items `0..count` in fixed-size chunks (in parallel) and
/// sums the contributions in item order.
fn assemble<T, F>(count: usize, shapes: &[(usize, usize)], vec_lens: &[usize], kernel: F) -> (Vec<CsrMatrix<T>>, Vec<Vec<T>>)
where
    T: Scalar,
    F: Fn(usize, &mut [Triplets<T>], &mut [Vec<(u32, T)>]) + Sync,
{
    let chunks: Vec<Chunk<T>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut mats: Vec<Triplets<T>> = shapes.iter().map(|&(r, c)| Triplets::new(r, c)).collect();
            let mut vecs: Vec<Vec<(u32, T)>> = vec![Vec::new(); vec_lens.len()];
            for item in c * CHUNK..((c + 1) * CHUNK).min(count) {
                kernel(item, &mut mats, &mut vecs);
            }
            Chunk { mats, vecs }
        })
        .collect();
    let mats = (0..shapes.len())
        .map(|m| {
            let parts: Vec<&Triplets<T>> = chunks.iter().map(|c| &c.mats[m]).collect();
            Triplets::merge_to_csr(shapes[m].0, shapes[m].1, &parts)
        })
        .collect();
    let vecs = vec_lens
        .iter()
        .enumerate()
        .map(|(v, &len)| {
            let mut out = vec![T::zero(); len];
            for c in &chunks {
                for &(i, x) in &c.vecs[v] {
                    out[i as usize] += x;
                }
            }
            out
        })
        .collect();
    (mats, vecs)
}

fn push_dense<T: Scalar>(t: &mut Triplets<T>, rows: &[usize], cols: &[usize], m: &[T]) {
    let nc = cols.len();
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            let v = m[a * nc + b];
            if v != T::zero() {
                t.push(i, j, v);
            }
        }
    }
}

fn push_vec<T: Scalar>(out: &mut Vec<(u32, T)>, rows: &[usize], v: &[T]) {
    for (&i, &x) in rows.iter().zip(v) {
        if x != T::zero() {
            out.push((i as u32, x));
        }
    }
}

fn velocity_dofs(dofs: &[usize], n: usize) -> Vec<usize> {
    dofs.iter().copied().chain(dofs.iter().map(|&d| d + n)).collect()
}

/// Viscous, divergence and Nitsche blocks plus the load vectors.
pub struct SaddleParts<T> {
    pub a: CsrMatrix<T>,
    pub a_volume: CsrMatrix<T>,
    pub nitsche_sym: CsrMatrix<T>,
    pub b: CsrMatrix<T>,
    pub b_volume: CsrMatrix<T>,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
    pub f_body: Vec<T>,
    pub g_sym: Vec<T>,
}

pub fn assemble_saddle<T: Scalar>(
    space: &Space<T>,
    quad: &CutQuadrature<T>,
    setup: &PhysicalSetup<T>,
    stab: &StabilizationParams<T>,
) -> Result<SaddleParts<T>> {
    let n = space.n();
    let cells = space.mesh.active_cells().len();
    if quad.cells.len() != cells {
        return Err(Error::MissingQuadrature(quad.cells.len().min(cells)));
    }
    let mu = setup.viscosity;
    let nl = (space.degree() + 1).pow(2);
    let shapes = [(2 * n, 2 * n), (2 * n, 2 * n), (2 * n, 2 * n), (n, 2 * n), (n, 2 * n)];
    let lens = [2 * n, n, 2 * n, 2 * n];
    let (mats, vecs) = assemble(cells, &shapes, &lens, |pos, mats, vecs| {
        let (ij, dofs) = space.cell_dofs(pos);
        let vd = velocity_dofs(&dofs, n);
        let m = 2 * nl;
        let mut a_vol = vec![T::zero(); m * m];
        let mut nsym = vec![T::zero(); m * m];
        let mut pen = vec![T::zero(); m * m];
        let mut b_vol = vec![T::zero(); nl * m];
        let mut b_bnd = vec![T::zero(); nl * m];
        let mut f1 = vec![T::zero(); m];
        let mut fb = vec![T::zero(); m];
        let mut gs = vec![T::zero(); m];
        let mut f2 = vec![T::zero(); nl];
        let cq = &quad.cells[pos];
        for &(p, w) in &cq.volume {
            let ev = space.basis.eval_on_cell(ij, p, 1);
            let f = (setup.body_force)(p);
            let grads: Vec<[T; 2]> = (0..nl).map(|l| ev.grad(l)).collect();
            for a in 0..nl {
                let ga = grads[a];
                let na = ev.value(a);
                for alpha in 0..2 {
                    fb[a + alpha * nl] += w * f[alpha] * na;
                }
                for b in 0..nl {
                    let gb = grads[b];
                    let dd = w * mu * (ga[0] * gb[0] + ga[1] * gb[1]);
                    for alpha in 0..2 {
                        for beta in 0..2 {
                            let mut v = w * mu * gb[alpha] * ga[beta];
                            if alpha == beta {
                                v += dd;
                            }
                            a_vol[(a + alpha * nl) * m + b + beta * nl] += v;
                        }
                    }
                    for beta in 0..2 {
                        b_vol[a * m + b + beta * nl] -= w * na * gb[beta];
                    }
                }
            }
        }
        for facet in &cq.facets {
            let seg = &facet.segment;
            let nrm = seg.normal;
            match setup.kind(seg.region) {
                BoundaryKind::Neumann => {
                    for &(p, w) in &facet.points {
                        let ev = space.basis.eval_on_cell(ij, p, 0);
                        let h = (setup.neumann)(p, nrm);
                        for a in 0..nl {
                            for alpha in 0..2 {
                                f1[a + alpha * nl] += w * h[alpha] * ev.value(a);
                            }
                        }
                    }
                }
                BoundaryKind::Dirichlet => {
                    let hn = space.nitsche_h(pos, seg);
                    let tau = mu * stab.beta / hn;
                    for &(p, w) in &facet.points {
                        let ev = space.basis.eval_on_cell(ij, p, 1);
                        let g = (setup.dirichlet)(p, seg.region);
                        let gn = g[0] * nrm[0] + g[1] * nrm[1];
                        for a in 0..nl {
                            let na = ev.value(a);
                            let ga = ev.grad(a);
                            let dna = ga[0] * nrm[0] + ga[1] * nrm[1];
                            let g_grad = g[0] * ga[0] + g[1] * ga[1];
                            f2[a] += w * na * gn;
                            for alpha in 0..2 {
                                gs[a + alpha * nl] += w * mu * (g[alpha] * dna + nrm[alpha] * g_grad);
                                f1[a + alpha * nl] += w * tau * g[alpha] * na;
                            }
                            for b in 0..nl {
                                let nb = ev.value(b);
                                for alpha in 0..2 {
                                    let row = (a + alpha * nl) * m;
                                    pen[row + b + alpha * nl] += w * tau * na * nb;
                                    for beta in 0..2 {
                                        let mut v = nrm[alpha] * ga[beta];
                                        if alpha == beta {
                                            v += dna;
                                        }
                                        nsym[row + b + beta * nl] += w * mu * v * nb;
                                    }
                                }
                                for beta in 0..2 {
                                    b_bnd[a * m + b + beta * nl] += w * na * nb * nrm[beta];
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut a_full = vec![T::zero(); m * m];
        for r in 0..m {
            for c in 0..m {
                a_full[r * m + c] = a_vol[r * m + c] - nsym[r * m + c] - nsym[c * m + r] + pen[r * m + c];
            }
        }
        let b_full: Vec<T> = b_vol.iter().zip(&b_bnd).map(|(&x, &y)| x + y).collect();
        for i in 0..m {
            f1[i] += fb[i] - gs[i];
        }
        push_dense(&mut mats[0], &vd, &vd, &a_full);
        push_dense(&mut mats[1], &vd, &vd, &a_vol);
        push_dense(&mut mats[2], &vd, &vd, &nsym);
        push_dense(&mut mats[3], &dofs, &vd, &b_full);
        push_dense(&mut mats[4], &dofs, &vd, &b_vol);
        push_vec(&mut vecs[0], &vd, &f1);
        push_vec(&mut vecs[1], &dofs, &f2);
        push_vec(&mut vecs[2], &vd, &fb);
        push_vec(&mut vecs[3], &vd, &gs);
    });
    let mut mats = mats.into_iter();
    let mut vecs = vecs.into_iter();
    Ok(SaddleParts {
        a: mats.next().unwrap(),
        a_volume: mats.next().unwrap(),
        nitsche_sym: mats.next().unwrap(),
        b: mats.next().unwrap(),
        b_volume: mats.next().unwrap(),
        f1: vecs.next().unwrap(),
        f2: vecs.next().unwrap(),
        f_body: vecs.next().unwrap(),
        g_sym: vecs.next().unwrap(),
    })
}

/// Evaluates a velocity from compact coefficients at a point of a known cell.
fn velocity_on_cell<T: Scalar>(ev: &LocalBasisEval<T>, dofs: &[usize], n: usize, uhat: &[T]) -> [T; 2] {
    let mut v = [T::zero(); 2];
    for (l, &d) in dofs.iter().enumerate() {
        let nl = ev.value(l);
        v[0] += uhat[d] * nl;
        v[1] += uhat[d + n] * nl;
    }
    v
}

/// `C(v)_{(a,alpha),(b,beta)} = int (v . grad N_b) N_a delta_{alpha beta}`.
pub fn assemble_convection<T: Scalar>(space: &Space<T>, quad: &CutQuadrature<T>, u_prev: &[T]) -> Result<CsrMatrix<T>> {
    let n = space.n();
    if u_prev.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            got: u_prev.len(),
        });
    }
    let nl = (space.degree() + 1).pow(2);
    let cells = space.mesh.active_cells().len();
    let (mats, _) = assemble(cells, &[(2 * n, 2 * n)], &[], |pos, mats, _| {
        let (ij, dofs) = space.cell_dofs(pos);
        let vd = velocity_dofs(&dofs, n);
        let m = 2 * nl;
        let mut loc = vec![T::zero(); m * m];
        for &(p, w) in &quad.cells[pos].volume {
            let ev = space.basis.eval_on_cell(ij, p, 1);
            let v = velocity_on_cell(&ev, &dofs, n, u_prev);
            for a in 0..nl {
                let na = w * ev.value(a);
                for b in 0..nl {
                    let gb = ev.grad(b);
                    let c = na * (v[0] * gb[0] + v[1] * gb[1]);
                    loc[a * m + b] += c;
                    loc[(a + nl) * m + b + nl] += c;
                }
            }
        }
        push_dense(&mut mats[0], &vd, &vd, &loc);
    });
    Ok(mats.into_iter().next().unwrap())
}

fn face_rule<T: Scalar>(face: &Face<T>, rule: &UnitRule<T>) -> Vec<(T, T)> {
    let (a, b) = face.extent;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| (a + t * (b - a), w * (b - a)))
        .collect()
}

/// Sum over the given faces of `scale(h_F) int_F [d_n^k N_i][d_n^k N_j] ds`,
/// repeated on `components` diagonal blocks.
fn assemble_jump_penalty<T: Scalar>(space: &Space<T>, faces: &[&Face<T>], components: usize, scale: impl Fn(T) -> T + Sync) -> CsrMatrix<T> {
    let n = space.n();
    let rule = UnitRule::new(space.degree() + 1);
    let (mats, _) = assemble(faces.len(), &[(components * n, components * n)], &[], |f, mats, _| {
        let face = faces[f];
        let s = scale(space.mesh.face_h(face));
        let mut ids: Vec<usize> = Vec::new();
        let mut loc: Vec<T> = Vec::new();
        for (t, w) in face_rule(face, &rule) {
            let (fid, jv) = space.face_jump(face, t);
            if ids.is_empty() {
                ids = fid;
                loc = vec![T::zero(); ids.len() * ids.len()];
            }
            let nf = ids.len();
            for i in 0..nf {
                for j in 0..nf {
                    loc[i * nf + j] += w * s * jv[i] * jv[j];
                }
            }
        }
        for c in 0..components {
            let rows: Vec<usize> = ids.iter().map(|&i| i + c * n).collect();
            push_dense(&mut mats[0], &rows, &rows, &loc);
        }
    });
    mats.into_iter().next().unwrap()
}

/// Pressure skeleton penalty over all skeleton faces.
pub fn assemble_skeleton_penalty<T: Scalar>(space: &Space<T>, stab: &StabilizationParams<T>, mu: T) -> CsrMatrix<T> {
    let k = space.degree() as i32;
    let faces: Vec<&Face<T>> = space.mesh.skeleton_faces().iter().collect();
    let gamma = stab.gamma;
    assemble_jump_penalty(space, &faces, 1, |h| gamma / mu * h.powi(2 * k + 1))
}

/// Velocity ghost penalty over the ghost faces, per component.
pub fn assemble_ghost_penalty<T: Scalar>(space: &Space<T>, stab: &StabilizationParams<T>, mu: T) -> CsrMatrix<T> {
    let k = space.degree() as i32;
    let faces: Vec<&Face<T>> = space.mesh.ghost_faces().collect();
    let gt = stab.gamma_tilde;
    assemble_jump_penalty(space, &faces, 2, |h| gt * mu * h.powi(2 * k - 1))
}

/// Pressure mass matrix over the physical domain and the mean vector.
pub fn assemble_mass<T: Scalar>(space: &Space<T>, quad: &CutQuadrature<T>) -> (CsrMatrix<T>, Vec<T>) {
    let n = space.n();
    let nl = (space.degree() + 1).pow(2);
    let cells = space.mesh.active_cells().len();
    let (mats, vecs) = assemble(cells, &[(n, n)], &[n], |pos, mats, vecs| {
        let (ij, dofs) = space.cell_dofs(pos);
        let mut loc = vec![T::zero(); nl * nl];
        let mut mv = vec![T::zero(); nl];
        for &(p, w) in &quad.cells[pos].volume {
            let ev = space.basis.eval_on_cell(ij, p, 0);
            for a in 0..nl {
                let na = w * ev.value(a);
                mv[a] += na;
                for b in 0..nl {
                    loc[a * nl + b] += na * ev.value(b);
                }
            }
        }
        push_dense(&mut mats[0], &dofs, &dofs, &loc);
        push_vec(&mut vecs[0], &dofs, &mv);
    });
    (mats.into_iter().next().unwrap(), vecs.into_iter().next().unwrap())
}

/// `int_Omega N_i`.
pub fn assemble_mean_constraint<T: Scalar>(space: &Space<T>, quad: &CutQuadrature<T>) -> Vec<T> {
    assemble_mass(space, quad).1
}

/// Mass matrix plus the skeleton jump term.
pub fn assemble_pressure_gramian<T: Scalar>(space: &Space<T>, quad: &CutQuadrature<T>, stab: &StabilizationParams<T>, mu: T) -> Result<CsrMatrix<T>> {
    let (mass, _) = assemble_mass(space, quad);
    let skel = assemble_skeleton_penalty(space, stab, mu);
    CsrMatrix::linear_combination(&[(T::one(), &mass), (T::one(), &skel)])
}

pub fn assemble_system<T: Scalar>(
    space: &Space<T>,
    quad: &CutQuadrature<T>,
    setup: &PhysicalSetup<T>,
    stab: &StabilizationParams<T>,
) -> Result<SystemBlocks<T>> {
    let parts = assemble_saddle(space, quad, setup, stab)?;
    let mu = setup.viscosity;
    let s_ghost = assemble_ghost_penalty(space, stab, mu);
    let s_skel = assemble_skeleton_penalty(space, stab, mu);
    let (mass, mean) = assemble_mass(space, quad);
    let m_pp = CsrMatrix::linear_combination(&[(T::one(), &mass), (T::one(), &s_skel)])?;
    Ok(SystemBlocks {
        n: space.n(),
        a: parts.a,
        a_volume: parts.a_volume,
        nitsche_sym: parts.nitsche_sym,
        b: parts.b,
        b_volume: parts.b_volume,
        s_ghost,
        s_skel,
        mass,
        m_pp,
        f1: parts.f1,
        f2: parts.f2,
        f_body: parts.f_body,
        g_sym: parts.g_sym,
        mean,
    })
}

impl<T: Scalar> SystemBlocks<T> {
    /// Size of the monolithic system (with the multiplier row if requested).
    pub fn system_size(&self, mean_zero: bool) -> usize {
        3 * self.n + usize::from(mean_zero)
    }

    /// `[[A + Sg + C, B^T, 0], [B, -Ss, m], [0, m^T, 0]]`.
    pub fn monolithic(&self, convection: Option<&CsrMatrix<T>>, mean_zero: bool) -> CsrMatrix<T> {
        let n = self.n;
        let size = self.system_size(mean_zero);
        let cap = self.a.nnz() + self.s_ghost.nnz() + 2 * self.b.nnz() + self.s_skel.nnz() + 2 * n;
        let mut t = Triplets::with_capacity(size, size, cap + convection.map_or(0, |c| c.nnz()));
        self.a.push_into(&mut t, 0, 0, T::one());
        self.s_ghost.push_into(&mut t, 0, 0, T::one());
        if let Some(c) = convection {
            c.push_into(&mut t, 0, 0, T::one());
        }
        for (i, j, v) in self.b.iter() {
            t.push(2 * n + i, j, v);
            t.push(j, 2 * n + i, v);
        }
        self.s_skel.push_into(&mut t, 2 * n, 2 * n, -T::one());
        if mean_zero {
            for (i, &m) in self.mean.iter().enumerate() {
                t.push(2 * n + i, 3 * n, m);
                t.push(3 * n, 2 * n + i, m);
            }
        }
        t.to_csr()
    }

    pub fn rhs(&self, mean_zero: bool) -> Vec<T> {
        let mut r = Vec::with_capacity(self.system_size(mean_zero));
        r.extend_from_slice(&self.f1);
        r.extend_from_slice(&self.f2);
        if mean_zero {
            r.push(T::zero());
        }
        r
    }
}

/// Skeleton penalty of a univariate spline space: one "face" per interior
/// breakpoint, weighted by `gamma / mu * h^(2k+1)`.
pub fn univariate_skeleton_matrix<T: Scalar>(kv: &KnotVector<T>, gamma: T, mu: T) -> Result<CsrMatrix<T>> {
    let n = kv.num_functions();
    let k = kv.degree() as i32;
    let mut t = Triplets::new(n, n);
    for line in 1..kv.num_elements() {
        let h = (kv.element_size(line - 1) + kv.element_size(line)) * T::lit(0.5);
        let s = gamma / mu * h.powi(2 * k + 1);
        let (first, jump) = kv.derivative_jump(line, kv.degree())?;
        for (i, &ji) in jump.iter().enumerate() {
            for (j, &jj) in jump.iter().enumerate() {
                t.push(first + i, first + j, s * ji * jj);
            }
        }
    }
    Ok(t.to_csr())
}
