//! Open B-spline bases of maximal regularity on an axis-aligned tensor grid.
//!
//! Knot vectors are stored by their breakpoints; the full open knot vector
//! (end knots repeated `k + 1` times) is derived. Basis function `i` of a
//! knot vector with `m` breakpoints is supported on elements `i - k ..= i`
//! (clamped to `0 .. m - 1`), so `m + k - 1` functions exist per direction.
//!
//! Point lookup is right-continuous: a point on an interior knot belongs to
//! the element to its right, except at the right end of the domain.

use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector<T> {
    breaks: Vec<T>,
    knots: Vec<T>,
    degree: usize,
}

/// Values and derivatives of the `k + 1` functions supported on one element.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateEval<T> {
    /// Global index of the first supported function (equals the element index).
    pub first: usize,
    /// `ders[r][j]`: `r`-th derivative of function `first + j`.
    pub ders: Vec<Vec<T>>,
}

impl<T: Scalar> KnotVector<T> {
    /// Uniform open knot vector on `[a, b]` with `num_elements` spans.
    pub fn open(a: T, b: T, num_elements: usize, degree: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval {
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        if num_elements == 0 {
            return Err(Error::ZeroElements);
        }
        let h = (b - a) / T::from_usize_lossy(num_elements);
        let mut breaks: Vec<T> = (0..num_elements)
            .map(|i| a + h * T::from_usize_lossy(i))
            .collect();
        breaks.push(b);
        Self::from_breakpoints(breaks, degree)
    }

    /// Open knot vector over strictly increasing breakpoints (non-uniform allowed).
    pub fn from_breakpoints(breaks: Vec<T>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidKnots("degree must be at least 1".into()));
        }
        if breaks.len() < 2 {
            return Err(Error::ZeroElements);
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidKnots(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let first = breaks[0];
        let last = *breaks.last().unwrap();
        let mut knots = Vec::with_capacity(breaks.len() + 2 * degree);
        knots.extend(std::iter::repeat(first).take(degree));
        knots.extend(breaks.iter().copied());
        knots.extend(std::iter::repeat(last).take(degree));
        Ok(Self {
            breaks,
            knots,
            degree,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Full knot sequence, end values repeated `degree + 1` times.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Unique knot values.
    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    pub fn num_elements(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn num_functions(&self) -> usize {
        self.num_elements() + self.degree
    }

    pub fn domain(&self) -> (T, T) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn element_size(&self, e: usize) -> T {
        self.breaks[e + 1] - self.breaks[e]
    }

    /// Elements on which function `i` is nonzero.
    pub fn support(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        let lo = i.saturating_sub(self.degree);
        let hi = i.min(self.num_elements() - 1);
        lo..=hi
    }

    /// Element containing `x`, right-continuous at interior knots.
    pub fn find_element(&self, x: T) -> Result<usize> {
        let (a, b) = self.domain();
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain([x.to_f64_lossy(), f64::NAN]));
        }
        let n = self.num_elements();
        if x >= b {
            return Ok(n - 1);
        }
        // last breakpoint index with breaks[e] <= x
        let e = self.breaks.partition_point(|&t| t <= x) - 1;
        Ok(e.min(n - 1))
    }

    pub fn eval(&self, x: T, max_deriv: usize) -> Result<UnivariateEval<T>> {
        let e = self.find_element(x)?;
        Ok(self.eval_on_element(e, x, max_deriv))
    }

    /// Evaluates the polynomial pieces of element `e` at `x` (which may lie on
    /// or outside the element boundary; used for one-sided traces).
    pub fn eval_on_element(&self, e: usize, x: T, max_deriv: usize) -> UnivariateEval<T> {
        let p = self.degree;
        let span = e + p;
        let u = &self.knots;
        let nd = max_deriv.min(p);

        let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![T::zero(); p + 1]; max_deriv + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![T::zero(); p + 1], vec![T::zero(); p + 1]];
        let pi = p as isize;
        for r in 0..=pi {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for k in 1..=nd as isize {
                let mut d = T::zero();
                let rk = r - k;
                let pk = pi - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk as usize];
                }
                let j1 = if rk >= -1 { 1 } else { -rk };
                let j2 = if r - 1 <= pk { k - 1 } else { pi - r };
                for j in j1..=j2 {
                    let (ju, rkj) = (j as usize, (rk + j) as usize);
                    a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[(pk + 1) as usize][rkj];
                    d += a[s2][ju] * ndu[rkj][pk as usize];
                }
                if r <= pk {
                    a[s2][k as usize] = -a[s1][(k - 1) as usize] / ndu[(pk + 1) as usize][r as usize];
                    d += a[s2][k as usize] * ndu[r as usize][pk as usize];
                }
                ders[k as usize][r as usize] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = T::from_usize_lossy(p);
        for k in 1..=nd {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= T::from_usize_lossy(p - k);
        }
        UnivariateEval { first: e, ders }
    }

    /// Jump `left limit - right limit` of the `order`-th derivative at interior
    /// breakpoint `line` for functions `line - 1 ..= line + k`.
    pub fn derivative_jump(&self, line: usize, order: usize) -> Result<(usize, Vec<T>)> {
        if line == 0 || line >= self.num_elements() {
            return Err(Error::BoundaryFace);
        }
        let x = self.breaks[line];
        let k = self.degree;
        let left = self.eval_on_element(line - 1, x, order);
        let right = self.eval_on_element(line, x, order);
        let mut jump = vec![T::zero(); k + 2];
        for j in 0..=k {
            jump[j] += left.ders[order][j];
            jump[j + 1] -= right.ders[order][j];
        }
        Ok((line - 1, jump))
    }
}

/// An interior knot-line segment of the tensor grid: normal `axis`, breakpoint
/// index `line` along that axis, and element index `along` in the other axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KnotFace {
    pub axis: usize,
    pub line: usize,
    pub along: usize,
}

/// Jump of a normal derivative across a [`KnotFace`] for every function
/// supported on either side. The "+" side is the element with the smaller
/// index (left or below); the jump is `f+ - f-`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceJump<T> {
    pub functions: Vec<usize>,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorBSplineBasis<T> {
    dirs: [KnotVector<T>; 2],
}

/// Local tensor-product evaluation at one point: `(k + 1)^2` functions.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasisEval<T> {
    /// First supported function index per direction.
    pub first: [usize; 2],
    pub degree: usize,
    tables: [Vec<Vec<T>>; 2],
}

impl<T: Scalar> LocalBasisEval<T> {
    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_deriv(&self) -> usize {
        self.tables[0].len() - 1
    }

    /// Mixed derivative `d^(a+b) / dx^a dy^b` of local function `l`.
    #[inline]
    pub fn deriv(&self, a: usize, b: usize, l: usize) -> T {
        let n = self.degree + 1;
        self.tables[0][a][l % n] * self.tables[1][b][l / n]
    }

    #[inline]
    pub fn value(&self, l: usize) -> T {
        self.deriv(0, 0, l)
    }

    #[inline]
    pub fn grad(&self, l: usize) -> [T; 2] {
        [self.deriv(1, 0, l), self.deriv(0, 1, l)]
    }

    /// Tensor index `(i, j)` of local function `l`.
    #[inline]
    pub fn tensor_index(&self, l: usize) -> [usize; 2] {
        let n = self.degree + 1;
        [self.first[0] + l % n, self.first[1] + l / n]
    }
}

impl<T: Scalar> TensorBSplineBasis<T> {
    pub fn new(x: KnotVector<T>, y: KnotVector<T>) -> Result<Self> {
        if x.degree() != y.degree() {
            return Err(Error::InvalidKnots(
                "all directions must share the same degree".into(),
            ));
        }
        Ok(Self { dirs: [x, y] })
    }

    pub fn uniform(lo: Point<T>, hi: Point<T>, cells: [usize; 2], degree: usize) -> Result<Self> {
        Self::new(
            KnotVector::open(lo[0], hi[0], cells[0], degree)?,
            KnotVector::open(lo[1], hi[1], cells[1], degree)?,
        )
    }

    pub fn degree(&self) -> usize {
        self.dirs[0].degree()
    }

    pub fn dir(&self, d: usize) -> &KnotVector<T> {
        &self.dirs[d]
    }

    pub fn functions_per_dir(&self) -> [usize; 2] {
        [self.dirs[0].num_functions(), self.dirs[1].num_functions()]
    }

    pub fn elements_per_dir(&self) -> [usize; 2] {
        [self.dirs[0].num_elements(), self.dirs[1].num_elements()]
    }

    pub fn num_functions(&self) -> usize {
        let [nx, ny] = self.functions_per_dir();
        nx * ny
    }

    #[inline]
    pub fn global_index(&self, ij: [usize; 2]) -> usize {
        ij[0] + ij[1] * self.dirs[0].num_functions()
    }

    #[inline]
    pub fn tensor_index(&self, g: usize) -> [usize; 2] {
        let nx = self.dirs[0].num_functions();
        [g % nx, g / nx]
    }

    pub fn eval(&self, p: Point<T>, max_deriv: usize) -> Result<LocalBasisEval<T>> {
        let ex = self.dirs[0]
            .find_element(p[0])
            .map_err(|_| Error::OutOfDomain([p[0].to_f64_lossy(), p[1].to_f64_lossy()]))?;
        let ey = self.dirs[1]
            .find_element(p[1])
            .map_err(|_| Error::OutOfDomain([p[0].to_f64_lossy(), p[1].to_f64_lossy()]))?;
        Ok(self.eval_on_cell([ex, ey], p, max_deriv))
    }

    /// Evaluates the polynomial pieces belonging to cell `(ex, ey)`.
    pub fn eval_on_cell(&self, cell: [usize; 2], p: Point<T>, max_deriv: usize) -> LocalBasisEval<T> {
        let ux = self.dirs[0].eval_on_element(cell[0], p[0], max_deriv);
        let uy = self.dirs[1].eval_on_element(cell[1], p[1], max_deriv);
        LocalBasisEval {
            first: [ux.first, uy.first],
            degree: self.degree(),
            tables: [ux.ders, uy.ders],
        }
    }

    /// Evaluates `sum_I coeffs[I] * d^(a+b) N_I` at `p`.
    pub fn eval_field(&self, coeffs: &[T], p: Point<T>, a: usize, b: usize) -> Result<T> {
        let loc = self.eval(p, a.max(b))?;
        Ok((0..loc.len())
            .map(|l| coeffs[self.global_index(loc.tensor_index(l))] * loc.deriv(a, b, l))
            .sum())
    }

    /// Jump of the `order`-th normal derivative across `face` at the point with
    /// tangential coordinate `t`.
    pub fn normal_jump(&self, face: KnotFace, t: T, order: usize) -> Result<FaceJump<T>> {
        let normal = face.axis;
        let tangent = 1 - normal;
        let (first_n, jump) = self.dirs[normal].derivative_jump(face.line, order)?;
        let along = self.dirs[tangent].eval_on_element(face.along, t, 0);
        let k = self.degree();
        let mut functions = Vec::with_capacity((k + 2) * (k + 1));
        let mut values = Vec::with_capacity((k + 2) * (k + 1));
        for (jt, &vt) in along.ders[0].iter().enumerate() {
            for (jn, &vn) in jump.iter().enumerate() {
                let mut ij = [0usize; 2];
                ij[normal] = first_n + jn;
                ij[tangent] = along.first + jt;
                functions.push(self.global_index(ij));
                values.push(vn * vt);
            }
        }
        Ok(FaceJump { functions, values })
    }

    /// Jump of the highest (`k`-th) normal derivative, the only one that does
    /// not vanish for maximal-regularity splines.
    pub fn kth_normal_jump(&self, face: KnotFace, t: T) -> Result<FaceJump<T>> {
        self.normal_jump(face, t, self.degree())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook Cox-de Boor recursion on the full knot vector, half-open spans
    /// with the last span closed.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            let last = *knots.last().unwrap();
            let inside = knots[i] <= x && x < knots[i + 1];
            let closes = x == last && knots[i] < knots[i + 1] && knots[i + 1] == last;
            return if inside || closes { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x);
        }
        v
    }

    #[test]
    fn open_knot_vector_examples() {
        let kv = KnotVector::open(0.0, 1.0, 2, 2).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        let kv = KnotVector::open(0.0, 4.0, 1, 1).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 4.0, 4.0]);
        let kv = KnotVector::open(0.0, 1.0, 11, 2).unwrap();
        assert_eq!(kv.num_functions(), 13);
    }

    #[test]
    fn open_knot_vector_errors() {
        assert!(matches!(
            KnotVector::open(1.0, 1.0, 3, 2),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            KnotVector::open(0.0, 1.0, 0, 2),
            Err(Error::ZeroElements)
        ));
        assert!(KnotVector::from_breakpoints(vec![0.0, 0.5, 0.5, 1.0], 2).is_err());
    }

    #[test]
    fn midpoint_values_quadratic() {
        let kv = KnotVector::open(0.0, 1.0, 4, 2).unwrap();
        let e = kv.eval(0.375, 0).unwrap();
        assert_eq!(e.first, 1);
        // oracle: direct recursion
        for j in 0..3 {
            let want = cox_de_boor(kv.knots(), e.first + j, 2, 0.375);
            assert_relative_eq!(e.ders[0][j], want, epsilon = 1e-14);
        }
        assert_relative_eq!(e.ders[0][0], 0.125, epsilon = 1e-14);
        assert_relative_eq!(e.ders[0][1], 0.75, epsilon = 1e-14);
        assert_relative_eq!(e.ders[0][2], 0.125, epsilon = 1e-14);
    }

    #[test]
    fn matches_recursion_on_graded_knots() {
        let kv = KnotVector::from_breakpoints(vec![0.0, 0.1, 0.15, 0.4, 0.9, 1.0], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: f64 = rng.random_range(0.0..1.0);
            let e = kv.eval(x, 0).unwrap();
            for i in 0..kv.num_functions() {
                let local = i.checked_sub(e.first).filter(|&j| j <= 3);
                let got = local.map_or(0.0, |j| e.ders[0][j]);
                assert_relative_eq!(got, cox_de_boor(kv.knots(), i, 3, x), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn partition_of_unity_and_derivative_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for k in 1..=3 {
            let kv = KnotVector::open(-1.0, 2.0, 7, k).unwrap();
            for _ in 0..100 {
                let x: f64 = rng.random_range(-1.0..2.0);
                let e = kv.eval(x, k + 1).unwrap();
                assert_relative_eq!(e.ders[0].iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                for r in 1..=k + 1 {
                    assert!(e.ders[r].iter().sum::<f64>().abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn derivatives_above_degree_vanish() {
        let kv = KnotVector::open(0.0, 1.0, 5, 2).unwrap();
        let e = kv.eval(0.33, 3).unwrap();
        assert!(e.ders[3].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..=3 {
            let kv = KnotVector::open(0.0, 1.0, 6, k).unwrap();
            let step = 1e-6;
            for _ in 0..50 {
                let x: f64 = rng.random_range(0.0..1.0);
                let e = kv.find_element(x).unwrap();
                let (a, b) = (kv.breakpoints()[e], kv.breakpoints()[e + 1]);
                if x - a < 1e-3 || b - x < 1e-3 {
                    continue;
                }
                let c = kv.eval_on_element(e, x, k);
                for r in 1..=k {
                    let plus = kv.eval_on_element(e, x + step, r - 1);
                    let minus = kv.eval_on_element(e, x - step, r - 1);
                    for j in 0..=k {
                        let fd = (plus.ders[r - 1][j] - minus.ders[r - 1][j]) / (2.0 * step);
                        let scale = c.ders[r][j].abs().max(1.0);
                        assert!((fd - c.ders[r][j]).abs() <= 1e-6 * scale * 10f64.powi(r as i32));
                    }
                }
            }
        }
    }

    #[test]
    fn right_continuous_lookup() {
        let kv = KnotVector::open(0.0, 1.0, 4, 2).unwrap();
        assert_eq!(kv.find_element(0.25).unwrap(), 1);
        assert_eq!(kv.find_element(1.0).unwrap(), 3);
        assert_eq!(kv.find_element(0.0).unwrap(), 0);
        assert!(kv.find_element(1.5).is_err());
    }

    #[test]
    fn tensor_value_is_product_of_univariate() {
        let basis = TensorBSplineBasis::uniform([0.0, 0.0], [1.0, 2.0], [3, 4], 2).unwrap();
        let p = [0.41, 1.27];
        let loc = basis.eval(p, 1).unwrap();
        let ux = basis.dir(0).eval(p[0], 1).unwrap();
        let uy = basis.dir(1).eval(p[1], 1).unwrap();
        let mut sum = 0.0;
        let mut gsum = [0.0f64, 0.0];
        for l in 0..loc.len() {
            let (i, j) = (l % 3, l / 3);
            assert_relative_eq!(loc.value(l), ux.ders[0][i] * uy.ders[0][j], epsilon = 1e-15);
            assert_relative_eq!(loc.grad(l)[0], ux.ders[1][i] * uy.ders[0][j], epsilon = 1e-14);
            sum += loc.value(l);
            gsum[0] += loc.grad(l)[0];
            gsum[1] += loc.grad(l)[1];
        }
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(gsum[0].abs() < 1e-12 && gsum[1].abs() < 1e-12);
        assert!(basis.eval([1.2, 0.5], 0).is_err());
    }

    #[test]
    fn single_precision_partition_of_unity() {
        let basis = TensorBSplineBasis::<f32>::uniform([0.0, 0.0], [1.0, 1.0], [5, 5], 3).unwrap();
        let loc = basis.eval([0.123, 0.777], 1).unwrap();
        let s: f32 = (0..loc.len()).map(|l| loc.value(l)).sum();
        assert!((s - 1.0).abs() < 1e-5);
    }

    #[test]
    fn hat_function_slope_jump() {
        let h = 0.25;
        let kv = KnotVector::open(0.0, 1.0, 4, 1).unwrap();
        let (first, jump) = kv.derivative_jump(2, 1).unwrap();
        // hat function 2 peaks at x = 0.5: slope +1/h on the left, -1/h on the right
        assert_eq!(first, 1);
        assert_relative_eq!(jump[1], 2.0 / h, epsilon = 1e-12);
        assert!(matches!(kv.derivative_jump(0, 1), Err(Error::BoundaryFace)));
        assert!(matches!(kv.derivative_jump(4, 1), Err(Error::BoundaryFace)));
    }

    #[test]
    fn lower_order_jumps_vanish_for_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=3 {
            let basis = TensorBSplineBasis::uniform([0.0, 0.0], [1.0, 1.0], [6, 6], k).unwrap();
            let h = 1.0 / 6.0;
            let coeffs: Vec<f64> = (0..basis.num_functions())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            for axis in 0..2 {
                for line in 1..6 {
                    for along in 0..6 {
                        let face = KnotFace { axis, line, along };
                        let t = (along as f64 + 0.37) * h;
                        for order in 0..k {
                            let j = basis.normal_jump(face, t, order).unwrap();
                            let v: f64 = j.functions.iter().zip(&j.values).map(|(&f, &w)| coeffs[f] * w).sum();
                            assert!(v.abs() <= 1e-10 / h.powi(order as i32));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn polynomial_has_no_kth_jump() {
        // Greville abscissae reproduce x exactly; x^k via blossoming is overkill,
        // use linear x (degree <= k) and constant.
        let k = 2;
        let basis = TensorBSplineBasis::uniform([0.0, 0.0], [1.0, 1.0], [5, 5], k).unwrap();
        let kv = basis.dir(0);
        let greville: Vec<f64> = (0..kv.num_functions())
            .map(|i| kv.knots()[i + 1..=i + k].iter().sum::<f64>() / k as f64)
            .collect();
        let coeffs: Vec<f64> = (0..basis.num_functions())
            .map(|g| {
                let [i, j] = basis.tensor_index(g);
                1.0 + 2.0 * greville[i] - greville[j]
            })
            .collect();
        let face = KnotFace { axis: 0, line: 2, along: 3 };
        let jmp = basis.kth_normal_jump(face, 0.7).unwrap();
        let v: f64 = jmp.functions.iter().zip(&jmp.values).map(|(&f, &w)| coeffs[f] * w).sum();
        assert!(v.abs() < 1e-10);
        // field value reproduces the linear function
        let val = basis.eval_field(&coeffs, [0.31, 0.62], 0, 0).unwrap();
        assert_relative_eq!(val, 1.0 + 2.0 * 0.31 - 0.62, epsilon = 1e-12);
    }
}
