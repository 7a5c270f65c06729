//! Saddle-point solves, Picard iteration and the inf-sup diagnostic.
//!
//! Symmetric systems are factorized with a supernodal Bunch-Kaufman
//! `L B L^T` on an AMD ordering; everything else falls back to sparse LU.
//! Linearized Navier-Stokes systems are solved by GMRES, preconditioned with
//! the factorized Stokes operator. When that takes too many iterations the
//! current linearized operator is factorized once and used instead.

use std::io::Write;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::solvers::Lu;
use faer::{Conj, Mat, MatMut, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Triplets};
use crate::weakform::{FlowSolution, SystemBlocks};

/// Relative residual required after every linear solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Relative asymmetry below which a matrix is treated as symmetric.
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// GMRES iteration count above which the preconditioner is refreshed.
const REFRESH_ITERATIONS: usize = 50;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(k: &CsrMatrix<f64>, x: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let kx = k.mul_vec(x)?;
    Ok(rhs.iter().zip(&kx).map(|(b, y)| b - y).collect())
}

fn residual_error(res: f64, scale: f64) -> Error {
    Error::Residual {
        residual: if scale > 0.0 { res / scale } else { res },
        tolerance: RESIDUAL_TOLERANCE,
    }
}

enum Inner {
    Lblt {
        symbolic: SymbolicCholesky<usize>,
        values: Vec<f64>,
        subdiag: Vec<f64>,
        perm_fwd: Vec<usize>,
        perm_inv: Vec<usize>,
    },
    Lu(Lu<usize, f64>),
}

/// Direct factorization of a square sparse matrix.
pub struct Factorization {
    n: usize,
    inner: Inner,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.n)
            .field("symmetric", &self.is_symmetric())
            .finish()
    }
}

impl Factorization {
    /// `L B L^T` if `k` is symmetric, LU otherwise.
    pub fn new(k: &CsrMatrix<f64>) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::LengthMismatch {
                expected: k.nrows(),
                got: k.ncols(),
            });
        }
        if k.asymmetry() <= SYMMETRY_TOLERANCE * k.max_abs() {
            Self::lblt(k)
        } else {
            Self::lu(k)
        }
    }

    pub fn lu(k: &CsrMatrix<f64>) -> Result<Self> {
        faer::set_global_parallelism(Par::Seq);
        let lu = k
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self {
            n: k.nrows(),
            inner: Inner::Lu(lu),
        })
    }

    /// Symmetric indefinite factorization; only the lower triangle is read.
    pub fn lblt(k: &CsrMatrix<f64>) -> Result<Self> {
        let n = k.nrows();
        let a = k.to_faer()?;
        let symbolic = factorize_symbolic_cholesky(a.symbolic(), Side::Lower, SymmetricOrdering::Amd, Default::default())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut perm_fwd = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()))
            .map_err(|_| Error::Factorization("out of memory".into()))?;
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut perm_fwd,
            &mut perm_inv,
            a.as_ref(),
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        );
        Ok(Self {
            n,
            inner: Inner::Lblt {
                symbolic,
                values,
                subdiag,
                perm_fwd,
                perm_inv,
            },
        })
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.inner, Inner::Lblt { .. })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites every column of `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: MatMut<'_, f64>) {
        match &self.inner {
            Inner::Lu(lu) => lu.solve_in_place(rhs),
            Inner::Lblt {
                symbolic,
                values,
                subdiag,
                perm_fwd,
                perm_inv,
            } => {
                let perm = PermRef::new_checked(perm_fwd, perm_inv, self.n);
                let f = IntranodeLbltRef::new(symbolic, values, subdiag, perm);
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(rhs.ncols(), Par::Seq));
                f.solve_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Solves `k x = rhs` with `f` plus a few steps of iterative refinement.
/// Returns `None` if the residual tolerance is not reached.
fn refine(f: &Factorization, k: &CsrMatrix<f64>, rhs: &[f64]) -> Result<Option<Vec<f64>>> {
    let mut x = f.solve(rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    let tol = RESIDUAL_TOLERANCE * inf_norm(rhs);
    let mut r = residual(k, &x, rhs)?;
    for _ in 0..4 {
        if inf_norm(&r) <= tol {
            return Ok(Some(x));
        }
        let dx = f.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        r = residual(k, &x, rhs)?;
    }
    Ok((inf_norm(&r) <= tol && x.iter().all(|v| v.is_finite())).then_some(x))
}

/// Direct solve with residual check; a failed symmetric factorization is
/// retried with LU.
pub fn solve_sparse(k: &CsrMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != k.nrows() {
        return Err(Error::LengthMismatch {
            expected: k.nrows(),
            got: rhs.len(),
        });
    }
    let f = Factorization::new(k)?;
    if let Some(x) = refine(&f, k, rhs)? {
        return Ok(x);
    }
    if f.is_symmetric() {
        log::debug!("symmetric factorization missed the residual tolerance, retrying with LU");
        if let Some(x) = refine(&Factorization::lu(k)?, k, rhs)? {
            return Ok(x);
        }
    }
    Err(non_convergent(k, rhs, &f))
}

fn non_convergent(k: &CsrMatrix<f64>, rhs: &[f64], f: &Factorization) -> Error {
    let x = f.solve(rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Error::Singular { pivot: 0.0 };
    }
    match residual(k, &x, rhs) {
        Ok(r) => residual_error(inf_norm(&r), inf_norm(rhs)),
        Err(e) => e,
    }
}

/// Restarted right-preconditioned GMRES. Returns the iterate and whether the
/// relative 2-norm residual dropped below `tol`.
pub fn gmres(
    k: &CsrMatrix<f64>,
    precond: &Factorization,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize, bool)> {
    let n = rhs.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = two_norm(rhs);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0, true));
    }
    let mut total = 0;
    while total < max_iterations {
        let r = residual(k, &x, rhs)?;
        let beta = two_norm(&r);
        if beta <= tol * bnorm {
            return Ok((x, total, true));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|a| a / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut m = 0;
        while m < restart && total < max_iterations {
            let zj = precond.solve(&v[m]);
            let mut w = k.mul_vec(&zj)?;
            z.push(zj);
            for i in 0..=m {
                let hij: f64 = w.iter().zip(&v[i]).map(|(a, b)| a * b).sum();
                h[i][m] = hij;
                w.iter_mut().zip(&v[i]).for_each(|(a, b)| *a -= hij * b);
            }
            let hn = two_norm(&w);
            h[m + 1][m] = hn;
            for i in 0..m {
                let t = cs[i] * h[i][m] + sn[i] * h[i + 1][m];
                h[i + 1][m] = -sn[i] * h[i][m] + cs[i] * h[i + 1][m];
                h[i][m] = t;
            }
            let d = h[m][m].hypot(h[m + 1][m]);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            cs[m] = h[m][m] / d;
            sn[m] = h[m + 1][m] / d;
            h[m][m] = d;
            h[m + 1][m] = 0.0;
            g[m + 1] = -sn[m] * g[m];
            g[m] *= cs[m];
            m += 1;
            total += 1;
            if g[m].abs() <= tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|a| a / hn).collect());
        }
        if m == 0 {
            break;
        }
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&z[j]).for_each(|(a, b)| *a += yj * b);
        }
    }
    let done = two_norm(&residual(k, &x, rhs)?) <= tol * bnorm;
    Ok((x, total, done))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub relaxation: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 30,
            relaxation: 1.0,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 || !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Config(format!("invalid Picard settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardHistory {
    /// Relative velocity increment per iteration.
    pub increments: Vec<f64>,
    pub converged: bool,
}

/// Solver for one assembled saddle-point system, reusable across convection
/// matrices.
pub struct SaddleSolver<'a> {
    blocks: &'a SystemBlocks<f64>,
    mean_zero: bool,
    /// Pinned pressure unknown (row and column replaced by the identity).
    pin: Option<usize>,
    lambda: f64,
    stokes: CsrMatrix<f64>,
    rhs: Vec<f64>,
    factor: Factorization,
    /// Factorized linearized operator of an earlier Picard step.
    oseen: Option<Factorization>,
}

impl<'a> SaddleSolver<'a> {
    /// Assembles and factorizes the Stokes operator.
    ///
    /// With `mean_zero` the bordered system is not factorized directly: its
    /// dense multiplier row ruins the fill. The constant pressure spans both
    /// kernels of the unbordered matrix, so `lambda = 1^T f2 / |Omega|`, one
    /// pressure unknown is pinned, and the pressure is shifted to zero mean
    /// afterwards. Residuals are checked against the full bordered system.
    pub fn new(blocks: &'a SystemBlocks<f64>, mean_zero: bool) -> Result<Self> {
        let n = blocks.n;
        let mut rhs = blocks.rhs(false);
        let (pin, lambda) = if mean_zero {
            let area: f64 = blocks.mean.iter().sum();
            if !(area > 0.0) {
                return Err(Error::EmptyDomain);
            }
            let lambda = blocks.f2.iter().sum::<f64>() / area;
            // the function with the largest support inside the domain
            let pin = (0..n)
                .max_by(|&a, &b| blocks.mean[a].total_cmp(&blocks.mean[b]).then(b.cmp(&a)))
                .ok_or(Error::EmptyDomain)?;
            for (i, &m) in blocks.mean.iter().enumerate() {
                rhs[2 * n + i] -= lambda * m;
            }
            rhs[2 * n + pin] = 0.0;
            (Some(2 * n + pin), lambda)
        } else {
            (None, 0.0)
        };
        let mut s = Self {
            blocks,
            mean_zero,
            pin,
            lambda,
            stokes: CsrMatrix::zeros(0, 0),
            rhs,
            factor: Factorization::lblt(&CsrMatrix::identity(1))?,
            oseen: None,
        };
        s.stokes = s.system(None);
        s.factor = Factorization::new(&s.stokes)?;
        Ok(s)
    }

    fn system(&self, convection: Option<&CsrMatrix<f64>>) -> CsrMatrix<f64> {
        let k = self.blocks.monolithic(convection, false);
        match self.pin {
            None => k,
            Some(r) => {
                let mut t = Triplets::with_capacity(k.nrows(), k.ncols(), k.nnz());
                for (i, j, v) in k.iter() {
                    if i != r && j != r {
                        t.push(i, j, v);
                    }
                }
                t.push(r, r, 1.0);
                t.to_csr()
            }
        }
    }

    /// Solves with the convection block `convection` (Stokes if `None`),
    /// starting GMRES from `guess` when given.
    pub fn solve(&mut self, convection: Option<&CsrMatrix<f64>>, guess: Option<&FlowSolution<f64>>) -> Result<FlowSolution<f64>> {
        let x = match convection {
            None => match refine(&self.factor, &self.stokes, &self.rhs)? {
                Some(x) => x,
                None => solve_sparse(&self.stokes, &self.rhs)?,
            },
            Some(c) => {
                let k = self.system(Some(c));
                let x0 = guess.map(|g| {
                    let mut v = g.uhat.clone();
                    v.extend_from_slice(&g.phat);
                    if let Some(r) = self.pin {
                        let shift = g.phat[r - 2 * self.blocks.n];
                        v[2 * self.blocks.n..].iter_mut().for_each(|p| *p -= shift);
                    }
                    v
                });
                let precond = self.oseen.as_ref().unwrap_or(&self.factor);
                let (x, its, ok) = gmres(&k, precond, &self.rhs, x0.as_deref(), 1e-13, 60, 600)?;
                log::debug!("gmres: {its} iterations");
                if its > REFRESH_ITERATIONS {
                    log::debug!("factorizing the linearized operator as the new preconditioner");
                    self.oseen = Some(Factorization::new(&k)?);
                }
                if ok && inf_norm(&residual(&k, &x, &self.rhs)?) <= RESIDUAL_TOLERANCE * inf_norm(&self.rhs) {
                    x
                } else {
                    log::debug!("gmres stalled, falling back to a direct solve");
                    solve_sparse(&k, &self.rhs)?
                }
            }
        };
        self.finish(x, convection)
    }

    fn finish(&self, mut x: Vec<f64>, convection: Option<&CsrMatrix<f64>>) -> Result<FlowSolution<f64>> {
        let n = self.blocks.n;
        if !self.mean_zero {
            return Ok(split(self.blocks, x, false));
        }
        let area: f64 = self.blocks.mean.iter().sum();
        let shift = self.blocks.mean.iter().zip(&x[2 * n..]).map(|(m, p)| m * p).sum::<f64>() / area;
        x[2 * n..].iter_mut().for_each(|p| *p -= shift);
        x.push(self.lambda);
        let full = self.blocks.monolithic(convection, true);
        let b = self.blocks.rhs(true);
        let res = inf_norm(&residual(&full, &x, &b)?);
        let scale = inf_norm(&b);
        if !(res <= RESIDUAL_TOLERANCE * scale) {
            return Err(residual_error(res, scale));
        }
        Ok(split(self.blocks, x, true))
    }
}

fn split(blocks: &SystemBlocks<f64>, x: Vec<f64>, mean_zero: bool) -> FlowSolution<f64> {
    let n = blocks.n;
    FlowSolution {
        uhat: x[..2 * n].to_vec(),
        phat: x[2 * n..3 * n].to_vec(),
        lambda: if mean_zero { Some(x[3 * n]) } else { None },
    }
}

/// Solves the linear system with an optional convection block.
pub fn solve_linearized(blocks: &SystemBlocks<f64>, convection: Option<&CsrMatrix<f64>>, mean_zero: bool) -> Result<FlowSolution<f64>> {
    SaddleSolver::new(blocks, mean_zero)?.solve(convection, None)
}

pub fn solve_stokes(blocks: &SystemBlocks<f64>, mean_zero: bool) -> Result<FlowSolution<f64>> {
    solve_linearized(blocks, None, mean_zero)
}

/// Picard iteration started from the Stokes solution. `convection` assembles
/// the convection block for a given velocity coefficient vector. A run that
/// exhausts `max_iterations` returns the last iterate with
/// `history.converged == false`.
pub fn solve_navier_stokes<F>(
    blocks: &SystemBlocks<f64>,
    mean_zero: bool,
    cfg: &PicardConfig,
    mut convection: F,
) -> Result<(FlowSolution<f64>, PicardHistory)>
where
    F: FnMut(&[f64]) -> Result<CsrMatrix<f64>>,
{
    cfg.validate()?;
    let mut solver = SaddleSolver::new(blocks, mean_zero)?;
    let mut sol = solver.solve(None, None)?;
    let mut history = PicardHistory::default();
    let w = cfg.relaxation;
    for it in 0..cfg.max_iterations {
        let c = convection(&sol.uhat)?;
        let next = solver.solve(Some(&c), Some(&sol))?;
        let mut diff = 0.0;
        let mut norm = 0.0;
        let mut relaxed = next.clone();
        for (i, r) in relaxed.uhat.iter_mut().enumerate() {
            *r = w * next.uhat[i] + (1.0 - w) * sol.uhat[i];
            diff += (*r - sol.uhat[i]).powi(2);
            norm += r.powi(2);
        }
        for (i, r) in relaxed.phat.iter_mut().enumerate() {
            *r = w * next.phat[i] + (1.0 - w) * sol.phat[i];
        }
        let inc = if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() };
        log::debug!("picard iteration {} increment {inc:.3e}", it + 1);
        history.increments.push(inc);
        sol = relaxed;
        if inc <= cfg.tolerance {
            history.converged = true;
            break;
        }
    }
    Ok((sol, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupResult {
    pub lambda_h: f64,
    /// Smallest generalized eigenvalues, ascending.
    pub spectrum: Vec<f64>,
    pub kernel_modes: usize,
    pub zero_mode_detected: bool,
}

/// Generalized eigenvalues of `(B V^-1 B^T + Ss) q = lambda^2 Mpp q` with
/// `V = A + Sg`, computed densely.
pub fn infsup_constant(blocks: &SystemBlocks<f64>) -> Result<InfSupResult> {
    let n = blocks.n;
    let v = CsrMatrix::linear_combination(&[(1.0, &blocks.a), (1.0, &blocks.s_ghost)])?;
    let f = Factorization::new(&v)?;
    let mut x = Mat::<f64>::zeros(2 * n, n);
    for (i, j, b) in blocks.b.iter() {
        x[(j, i)] = b;
    }
    f.solve_in_place(x.as_mut());
    if (0..n).any(|j| (0..2 * n).any(|i| !x[(i, j)].is_finite())) {
        return Err(Error::Singular { pivot: 0.0 });
    }
    let mut s = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, b) in blocks.b.row(i) {
            for c in 0..n {
                s[(i, c)] += b * x[(j, c)];
            }
        }
    }
    for (i, j, v) in blocks.s_skel.iter() {
        s[(i, j)] += v;
    }
    let s = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut m = Mat::<f64>::zeros(n, n);
    for (i, j, v) in blocks.m_pp.iter() {
        m[(i, j)] = v;
    }
    let llt = m.llt(Side::Lower).map_err(|e| Error::Eigen(format!("pressure Gramian: {e:?}")))?;
    let l = llt.L();
    // C = L^-1 S L^-T
    let mut y = s;
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, y.as_mut(), Par::Seq);
    let mut c = y.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = c
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = 1e-8 * max;
    let kernel_modes = eig.iter().filter(|&&e| e < threshold).count();
    let lambda_sq = eig
        .iter()
        .copied()
        .find(|&e| e >= threshold)
        .ok_or_else(|| Error::Eigen("no eigenvalue above the kernel threshold".into()))?;
    Ok(InfSupResult {
        lambda_h: lambda_sq.sqrt(),
        spectrum: eig.iter().take(12).copied().collect(),
        kernel_modes,
        zero_mode_detected: kernel_modes == 1,
    })
}

pub fn write_history_csv<W: Write>(out: &mut W, history: &PicardHistory) -> Result<()> {
    writeln!(out, "iteration,increment")?;
    for (i, inc) in history.increments.iter().enumerate() {
        writeln!(out, "{},{inc:.12e}", i + 1)?;
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(out: &mut W, result: &InfSupResult) -> Result<()> {
    writeln!(out, "index,eigenvalue")?;
    for (i, e) in result.spectrum.iter().enumerate() {
        writeln!(out, "{i},{e:.12e}")?;
    }
    Ok(())
}
