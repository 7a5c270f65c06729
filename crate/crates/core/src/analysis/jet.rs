//! Second-order forward-mode differentiation in two variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// Value, gradient and Hessian of a function of `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub g: [T; 2],
    pub h: [[T; 2]; 2],
}

impl<T: Scalar> Jet<T> {
    pub fn constant(v: T) -> Self {
        Self {
            v,
            g: [T::zero(); 2],
            h: [[T::zero(); 2]; 2],
        }
    }

    /// The coordinate function `x_d` evaluated at `value`.
    pub fn variable(value: T, d: usize) -> Self {
        let mut j = Self::constant(value);
        j.g[d] = T::one();
        j
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.v`.
    fn chain(self, f: T, df: T, ddf: T) -> Self {
        let mut out = Self::constant(f);
        for i in 0..2 {
            out.g[i] = df * self.g[i];
            for j in 0..2 {
                out.h[i][j] = ddf * self.g[i] * self.g[j] + df * self.h[i][j];
            }
        }
        out
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let half = T::lit(0.5);
        self.chain(s, half / s, -half * half / (s * self.v))
    }

    pub fn recip(self) -> Self {
        let r = T::one() / self.v;
        self.chain(r, -r * r, T::lit(2.0) * r * r * r)
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(T::one()),
            1 => self,
            _ => {
                let nn = T::from_i32(n).unwrap();
                let p2 = self.v.powi(n - 2);
                let p1 = p2 * self.v;
                self.chain(p1 * self.v, nn * p1, nn * (nn - T::one()) * p2)
            }
        }
    }

    pub fn laplacian(&self) -> T {
        self.h[0][0] + self.h[1][1]
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..2 {
            r.g[i] += o.g[i];
            for j in 0..2 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r.v += o.v;
        r
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self * -T::one()
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = Self::constant(self.v * o.v);
        for i in 0..2 {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..2 {
                r.h[i][j] = self.h[i][j] * o.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i]
                    + self.v * o.h[i][j];
            }
        }
        r
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        let mut r = self;
        r.v *= s;
        for i in 0..2 {
            r.g[i] *= s;
            for j in 0..2 {
                r.h[i][j] *= s;
            }
        }
        r
    }
}

impl<T: Scalar> Add<T> for Jet<T> {
    type Output = Self;
    fn add(self, s: T) -> Self {
        let mut r = self;
        r.v += s;
        r
    }
}

impl<T: Scalar> Sub<T> for Jet<T> {
    type Output = Self;
    fn sub(self, s: T) -> Self {
        self + (-s)
    }
}
