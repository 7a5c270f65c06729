//! Gauss-Legendre rules on intervals, squares and (collapsed) triangles.

use crate::scalar::{Point, Scalar};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A reusable 1D rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> UnitRule<T> {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self {
            nodes: x.iter().map(|&x| T::lit(0.5 * (x + 1.0))).collect(),
            weights: w.iter().map(|&w| T::lit(0.5 * w)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maps the rule onto the segment `a -> b`, pushing `(point, weight)`.
    pub fn segment(&self, a: Point<T>, b: Point<T>, out: &mut Vec<(Point<T>, T)>) {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            out.push(([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], w * len));
        }
    }

    /// Tensor rule on the rectangle `lo .. hi`.
    pub fn rectangle(&self, lo: Point<T>, hi: Point<T>, out: &mut Vec<(Point<T>, T)>) {
        let (dx, dy) = (hi[0] - lo[0], hi[1] - lo[1]);
        for (&ty, &wy) in self.nodes.iter().zip(&self.weights) {
            for (&tx, &wx) in self.nodes.iter().zip(&self.weights) {
                out.push(([lo[0] + tx * dx, lo[1] + ty * dy], wx * wy * dx * dy));
            }
        }
    }

    /// Collapsed (Duffy) tensor rule on a triangle; all weights positive.
    pub fn triangle(&self, a: Point<T>, b: Point<T>, c: Point<T>, out: &mut Vec<(Point<T>, T)>) {
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - a[0], c[1] - a[1]];
        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        for (&s, &ws) in self.nodes.iter().zip(&self.weights) {
            for (&t, &wt) in self.nodes.iter().zip(&self.weights) {
                // (s, t) in unit square -> (s, (1 - s) t) in reference triangle
                let u = s;
                let v = (T::one() - s) * t;
                let w = ws * wt * (T::one() - s) * jac;
                out.push(([a[0] + u * e1[0] + v * e2[0], a[1] + u * e1[1] + v * e2[1]], w));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_relative_eq!(got, want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        let rule = UnitRule::<f64>::new(4);
        let mut pts = Vec::new();
        rule.triangle([0.0, 0.0], [2.0, 0.0], [0.0, 1.0], &mut pts);
        let area: f64 = pts.iter().map(|p| p.1).sum();
        assert_relative_eq!(area, 1.0, epsilon = 1e-14);
        // \int x y over triangle (0,0),(2,0),(0,1) = 1/6
        let xy: f64 = pts.iter().map(|(p, w)| w * p[0] * p[1]).sum();
        assert_relative_eq!(xy, 1.0 / 6.0, epsilon = 1e-13);
        assert!(pts.iter().all(|p| p.1 > 0.0));
    }
}
