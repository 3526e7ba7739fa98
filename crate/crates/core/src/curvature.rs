//! Anisotropic shape operator, trace-free deficits, the `L^p` oscillation
//! estimate, and the Gauss-equation algebra for hypersurfaces of any dimension.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, Mat2};
use crate::integrand::Integrand;
use crate::mesh::{self, TensorField, TensorKind};
use crate::optim::golden_section;
use crate::surface::SurfaceGeometry;

/// `S_F` per node and its trace `H_F`.
#[derive(Clone, Debug)]
pub struct AnisotropicShape {
    pub s_f: TensorField,
    pub h_f: Vec<f64>,
}

/// `S_F = A_F(ν_Σ) ∘ dν_Σ` in each node's surface frame.
pub fn anisotropic_shape_operator(geo: &SurfaceGeometry, integrand: &Integrand) -> Result<AnisotropicShape> {
    let values: Vec<Result<Mat2>> = (0..geo.len())
        .into_par_iter()
        .map(|i| {
            let (f1, f2) = geo.frames[i];
            let nu = geo.normals[i];
            let a = integrand.anisotropy_in_frame(nu, f1, f2);
            let min_eig = geom::sym2_eigenvalues(&a)[0];
            if min_eig <= 0.0 {
                return Err(Error::Ellipticity { nu, min_eig });
            }
            Ok(geom::mat2_mul(&a, &geo.shape[i]))
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let h_f = values.iter().map(geom::mat2_trace).collect();
    Ok(AnisotropicShape { s_f: TensorField { values, kind: TensorKind::Operator }, h_f })
}

/// `S̊ = S − (tr S / 2) Id` and the trace field.
pub fn trace_free(s: &TensorField) -> (TensorField, Vec<f64>) {
    let traces: Vec<f64> = s.values.iter().map(geom::mat2_trace).collect();
    let values = s
        .values
        .iter()
        .map(|m| {
            // Diagonal entries are written as ±(a − b)/2 so the trace cancels exactly.
            let d = 0.5 * (m[0][0] - m[1][1]);
            [[d, m[0][1]], [m[1][0], -d]]
        })
        .collect();
    (TensorField { values, kind: s.kind }, traces)
}

/// Measured deficits for one surface.
#[derive(Clone, Debug, PartialEq)]
pub struct DeficitReport {
    pub p: f64,
    /// `‖S̊_F‖_{L^p}`.
    pub deficit: f64,
    /// Minimizer of `λ ↦ ‖S_F − λ Id‖_{L^p}`.
    pub lambda_star: f64,
    pub min_oscillation: f64,
    /// `H̄_F / n` with `H̄_F` the area average of `H_F`.
    pub mean_lambda: f64,
    /// `‖S_F − (H̄_F/n) Id‖_{L^p}`.
    pub mean_oscillation: f64,
    /// `min_oscillation / deficit`; NaN when the deficit vanishes.
    pub c_osc: f64,
}

fn shifted_norm(s: &TensorField, weights: &[f64], lambda: f64, p: f64) -> Result<f64> {
    let norms: Vec<f64> = s
        .values
        .iter()
        .map(|m| geom::mat2_frobenius(&[[m[0][0] - lambda, m[0][1]], [m[1][0], m[1][1] - lambda]]))
        .collect();
    mesh::lp_norm(&norms, weights, p)
}

/// Oscillation of `S_F` around multiples of the identity.
pub fn oscillation_deficit(s_f: &TensorField, weights: &[f64], p: f64) -> Result<DeficitReport> {
    let (ring, traces) = trace_free(s_f);
    let deficit = mesh::tensor_lp_norm(&ring, weights, p)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in &s_f.values {
        let e = geom::mat2_eigenvalues(m);
        lo = lo.min(e[0]);
        hi = hi.max(e[1]);
    }
    let (min_oscillation, lambda_star) = if hi - lo <= 0.0 {
        (shifted_norm(s_f, weights, lo, p)?, lo)
    } else {
        golden_section(|l| shifted_norm(s_f, weights, l, p), lo, hi, 1e-12)?
    };
    let area = mesh::deterministic_sum(weights.iter().copied());
    let h_bar = mesh::deterministic_sum(traces.iter().zip(weights).map(|(t, w)| t * w)) / area;
    let mean_lambda = 0.5 * h_bar;
    let mean_oscillation = shifted_norm(s_f, weights, mean_lambda, p)?;
    let c_osc = if deficit > 0.0 { min_oscillation / deficit } else { f64::NAN };
    Ok(DeficitReport { p, deficit, lambda_star, min_oscillation, mean_lambda, mean_oscillation, c_osc })
}

/// Deficit report of a surface for an integrand.
pub fn surface_deficit(geo: &SurfaceGeometry, integrand: &Integrand, p: f64) -> Result<DeficitReport> {
    let shape = anisotropic_shape_operator(geo, integrand)?;
    oscillation_deficit(&shape.s_f, &geo.area, p)
}

/// Gauss equation in an orthonormal frame: `Ric = H h − h²`, `R = H² − |h|²`.
pub fn gauss_ricci(h: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let mean = h.trace();
    let ric = h * mean - h * h;
    let r = mean * mean - h.component_mul(h).sum();
    (ric, r)
}

/// `Riem_{ijkl} = h_ik h_jl − h_il h_jk` by explicit loops, flattened row-major.
pub fn riemann_bruteforce(h: &DMatrix<f64>) -> Vec<f64> {
    let n = h.nrows();
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[((i * n + j) * n + k) * n + l] = h[(i, k)] * h[(j, l)] - h[(i, l)] * h[(j, k)];
                }
            }
        }
    }
    out
}

/// `Ric_ij = Σ_p Riem_{ipjp}` from a flattened Riemann tensor.
pub fn ricci_from_riemann(riem: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| (0..n).map(|p| riem[((i * n + p) * n + j) * n + p]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_free_of_identity_vanishes() {
        let s = TensorField { values: vec![[[1.0, 0.0], [0.0, 1.0]]], kind: TensorKind::Operator };
        let (r, t) = trace_free(&s);
        assert_eq!(r.values[0], [[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(t[0], 2.0);
    }

    #[test]
    fn trace_free_of_diagonal() {
        let s = TensorField { values: vec![[[3.0, 0.0], [0.0, 1.5]]], kind: TensorKind::Operator };
        let (r, _) = trace_free(&s);
        assert_eq!(r.values[0], [[0.75, 0.0], [0.0, -0.75]]);
    }

    #[test]
    fn identity_has_no_deficit() {
        let s = TensorField { values: vec![[[1.0, 0.0], [0.0, 1.0]]; 4], kind: TensorKind::Operator };
        let r = oscillation_deficit(&s, &[1.0; 4], 2.0).unwrap();
        assert_eq!(r.deficit, 0.0);
        assert_eq!(r.lambda_star, 1.0);
        assert_eq!(r.min_oscillation, 0.0);
        assert!(r.c_osc.is_nan());
    }

    #[test]
    fn unit_three_sphere() {
        let (ric, r) = gauss_ricci(&DMatrix::identity(3, 3));
        assert_eq!(ric, DMatrix::identity(3, 3) * 2.0);
        assert_eq!(r, 6.0);
    }
}
