//! Scalar abstraction used to evaluate integrands and parametrizations either
//! on plain `f64` or on forward-mode dual numbers.
//!
//! Nesting [`Dual`] gives exact higher derivatives: `Dual<Dual<f64, 2>, 2>`
//! carries a value, a gradient and a (redundantly stored) Hessian in two
//! variables, and `Dual<Dual<Dual<f64, 3>, 3>, 3>` gives third derivatives in
//! three variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    /// The plain `f64` value, dropping all derivative information.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        let mut acc = self;
        for _ in 1..n.abs() {
            acc = acc * self;
        }
        if n < 0 {
            Self::cst(1.0) / acc
        } else {
            acc
        }
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// First-order dual number in `N` directions over a scalar type `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub v: T,
    pub d: [T; N],
}

impl<T: Real, const N: usize> Dual<T, N> {
    pub fn constant(v: T) -> Self {
        Self { v, d: [T::cst(0.0); N] }
    }

    /// Independent variable number `k` with value `v`.
    pub fn var(v: T, k: usize) -> Self {
        let mut d = [T::cst(0.0); N];
        d[k] = T::cst(1.0);
        Self { v, d }
    }

    #[inline]
    fn chain(self, fv: T, dfv: T) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = dfv * *x;
        }
        Self { v: fv, d }
    }
}

impl<T: Real, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d.iter()) {
            *a = *a + *b;
        }
        Self { v: self.v + o.v, d }
    }
}

impl<T: Real, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d.iter()) {
            *a = *a - *b;
        }
        Self { v: self.v - o.v, d }
    }
}

impl<T: Real, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d.iter()) {
            *a = self.v * *b + *a * o.v;
        }
        Self { v: self.v * o.v, d }
    }
}

impl<T: Real, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::cst(1.0) / o.v;
        let q = self.v * inv;
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d.iter()) {
            *a = (*a - q * *b) * inv;
        }
        Self { v: q, d }
    }
}

impl<T: Real, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut d = self.d;
        for a in d.iter_mut() {
            *a = -*a;
        }
        Self { v: -self.v, d }
    }
}

impl<T: Real, const N: usize> Real for Dual<T, N> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(T::cst(v))
    }
    #[inline]
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, T::cst(0.5) / s)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), T::cst(1.0) / self.v)
    }
}

/// Second-order jet in two chart variables.
pub type Jet2 = Dual<Dual<f64, 2>, 2>;

/// Seeds a second-order jet for chart variable `k` at value `v`.
pub fn jet2_var(v: f64, k: usize) -> Jet2 {
    Dual::var(Dual::var(v, k), k)
}

/// Value, gradient and Hessian of a second-order jet.
pub fn jet2_parts(j: &Jet2) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    (
        j.v.v,
        [j.v.d[0], j.v.d[1]],
        [[j.d[0].d[0], j.d[0].d[1]], [j.d[1].d[0], j.d[1].d[1]]],
    )
}

/// Second-order jet in three ambient variables.
pub type Jet3 = Dual<Dual<f64, 3>, 3>;

pub fn jet3_point(x: [f64; 3]) -> [Jet3; 3] {
    [0, 1, 2].map(|k| Dual::var(Dual::var(x[k], k), k))
}

/// Value, gradient and Hessian of a second-order jet in three variables.
pub fn jet3_parts(j: &Jet3) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let mut h = [[0.0; 3]; 3];
    for (i, row) in h.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate() {
            *e = j.d[i].d[k];
        }
    }
    (j.v.v, j.v.d, h)
}

#[inline]
pub fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_rule() {
        let x = Dual::<f64, 1>::var(3.0, 0);
        let y = x * x * x;
        assert_eq!(y.v, 27.0);
        assert_eq!(y.d[0], 27.0);
    }

    #[test]
    fn jet2_second_derivatives() {
        let s = jet2_var(0.3, 0);
        let t = jet2_var(-0.2, 1);
        // f = exp(s) * t^2 + sqrt(1 + s*t)
        let f = s.exp() * t * t + (Jet2::cst(1.0) + s * t).sqrt();
        let (v, g, h) = jet2_parts(&f);
        let (sv, tv) = (0.3f64, -0.2f64);
        let r = (1.0 + sv * tv).sqrt();
        assert!((v - (sv.exp() * tv * tv + r)).abs() < 1e-15);
        assert!((g[0] - (sv.exp() * tv * tv + tv / (2.0 * r))).abs() < 1e-14);
        assert!((g[1] - (2.0 * sv.exp() * tv + sv / (2.0 * r))).abs() < 1e-14);
        let hst = 2.0 * sv.exp() * tv + 1.0 / (2.0 * r) - sv * tv / (4.0 * r * r * r);
        assert!((h[0][1] - hst).abs() < 1e-14);
        assert!((h[1][0] - hst).abs() < 1e-14);
        let hss = sv.exp() * tv * tv - tv * tv / (4.0 * r * r * r);
        assert!((h[0][0] - hss).abs() < 1e-14);
    }

    #[test]
    fn division_and_log() {
        let x = Dual::<f64, 1>::var(2.0, 0);
        let y = (Dual::cst(1.0) / x).ln();
        assert!((y.v + 2f64.ln()).abs() < 1e-15);
        assert!((y.d[0] + 0.5).abs() < 1e-15);
        let p = x.powi(-2);
        assert!((p.d[0] + 2.0 / 8.0).abs() < 1e-15);
    }
}
