//! Real, orthonormal spherical harmonics evaluated through solid-harmonic
//! recurrences, so they can be evaluated on dual numbers as well as `f64`.
//!
//! Convention: no Condon–Shortley phase,
//! `Y_l0 = N_l0 Q_l^0`, `Y_lm = √2 N_lm Q_l^m Re((x+iy)^m)` and
//! `Y_l,-m = √2 N_lm Q_l^m Im((x+iy)^m)` for `m > 0`, with
//! `N_lm = sqrt((2l+1)/(4π) (l-m)!/(l+m)!)`. Coefficients are stored at
//! index `l² + l + m`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Number of coefficients for band limit `l_max`.
pub fn num_coeffs(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

fn norm(l: usize, m: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// All real harmonics up to `l_max` at the direction of `x` (need not be unit).
pub fn eval_all<T: Real>(x: [T; 3], l_max: usize) -> Vec<T> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let (ux, uy, uz) = (x[0] / r, x[1] / r, x[2] / r);
    let mut out = vec![T::cst(0.0); num_coeffs(l_max)];

    // (x + iy)^m
    let mut cm = T::cst(1.0);
    let mut sm = T::cst(0.0);
    let mut dfact = 1.0; // (2m-1)!!
    for m in 0..=l_max {
        if m > 0 {
            let c = cm * ux - sm * uy;
            let s = cm * uy + sm * ux;
            cm = c;
            sm = s;
            dfact *= (2 * m - 1) as f64;
        }
        let mut q_prev2 = T::cst(0.0);
        let mut q_prev = T::cst(dfact);
        for l in m..=l_max {
            let q = if l == m {
                q_prev
            } else if l == m + 1 {
                let q = uz.scale((2 * m + 1) as f64) * q_prev;
                q_prev2 = q_prev;
                q_prev = q;
                q
            } else {
                let q = (uz.scale((2 * l - 1) as f64) * q_prev
                    - q_prev2.scale((l + m - 1) as f64))
                .scale(1.0 / (l - m) as f64);
                q_prev2 = q_prev;
                q_prev = q;
                q
            };
            let n = norm(l, m);
            let base = l * l + l;
            if m == 0 {
                out[base] = q.scale(n);
            } else {
                let k = n * std::f64::consts::SQRT_2;
                out[base + m] = (q * cm).scale(k);
                out[base - m] = (q * sm).scale(k);
            }
        }
    }
    out
}

/// Single harmonic `Y_lm`.
pub fn eval<T: Real>(l: usize, m: i64, x: [T; 3]) -> T {
    eval_all(x, l)[coeff_index(l, m)]
}

pub fn coeff_index(l: usize, m: i64) -> usize {
    assert!(m.unsigned_abs() as usize <= l, "|m| must not exceed l");
    ((l * l + l) as i64 + m) as usize
}

/// Band-limited function on the sphere given by harmonic coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub l_max: usize,
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(l_max: usize) -> Self {
        Self { l_max, coeffs: vec![0.0; num_coeffs(l_max)] }
    }

    pub fn harmonic(l: usize, m: i64, amplitude: f64) -> Self {
        let mut f = Self::zeros(l);
        f.coeffs[coeff_index(l, m)] = amplitude;
        f
    }

    /// `ν ↦ ⟨c, ν⟩` written in the harmonic basis.
    pub fn linear(c: [f64; 3]) -> Self {
        let k = (4.0 * PI / 3.0).sqrt();
        let mut f = Self::zeros(1);
        f.coeffs[coeff_index(1, 1)] = k * c[0];
        f.coeffs[coeff_index(1, -1)] = k * c[1];
        f.coeffs[coeff_index(1, 0)] = k * c[2];
        f
    }

    pub fn constant(value: f64) -> Self {
        let mut f = Self::zeros(0);
        f.coeffs[0] = value * (4.0 * PI).sqrt();
        f
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { l_max: self.l_max, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let l_max = self.l_max.max(other.l_max);
        let mut coeffs = vec![0.0; num_coeffs(l_max)];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        Self { l_max, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn eval<T: Real>(&self, x: [T; 3]) -> T {
        let ys = eval_all(x, self.l_max);
        let mut acc = T::cst(0.0);
        for (y, c) in ys.iter().zip(self.coeffs.iter()) {
            if *c != 0.0 {
                acc = acc + y.scale(*c);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let x = [0.36, -0.48, 0.8];
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert!((eval(1, 0, x) - c1 * 0.8).abs() < 1e-15);
        assert!((eval(1, 1, x) - c1 * 0.36).abs() < 1e-15);
        assert!((eval(1, -1, x) + c1 * 0.48).abs() < 1e-15);
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        assert!((eval(2, 0, x) - c20 * (3.0 * 0.64 - 1.0)).abs() < 1e-14);
        let c21 = (15.0 / (4.0 * PI)).sqrt();
        assert!((eval(2, 1, x) - c21 * 0.36 * 0.8).abs() < 1e-14);
        assert!((eval(2, -2, x) - c21 * 0.36 * -0.48).abs() < 1e-14);
        assert!((eval(0, 0, x) - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn linear_field_matches_dot_product() {
        let c = [0.3, -1.2, 0.7];
        let f = SpectralField::linear(c);
        let x = [0.6, 0.0, 0.8];
        assert!((f.eval(x) - (0.3 * 0.6 + 0.7 * 0.8)).abs() < 1e-14);
    }
}
