//! Anisotropic integrands on the unit sphere, the anisotropy matrix `A_F`,
//! the gauge function `F*` and the Wulff shape.
//!
//! Every family is represented through its 1-homogeneous extension
//! `F̄(x) = |x| F(x/|x|)`, written once generically over [`Real`]. Derivatives
//! come from dual numbers and are exact: at a unit vector `ν`
//!
//! * `∇F̄(ν) = DF(ν) + F(ν) ν` (the Cahn–Hoffman point of the Wulff shape),
//! * `∇²F̄(ν)` restricted to `T_ν S²` equals `D²F(ν) + F(ν) Id = A_F(ν)`.

use std::sync::OnceLock;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geom::{self, dot, Mat2, Mat3, Vec3};
use crate::mesh::{self, Domain, SphereMesh};
use crate::real::{jet2_parts, jet2_var, jet3_parts, jet3_point, Dual, Jet2, Real};
use crate::sh;

/// One harmonic mode of a perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub l: usize,
    pub m: i64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `F ≡ 1`.
    Constant,
    /// `F(ν) = sqrt(νᵀ M ν)` with `M` symmetric positive definite.
    Quadratic { m: Mat3 },
    /// `F = F_base · (1) + amplitude · Σ weight · Y_lm`.
    FourierPerturbed { base: Box<Family>, amplitude: f64, modes: Vec<Mode> },
}

impl Family {
    fn extension<T: Real>(&self, x: [T; 3]) -> T {
        match self {
            Family::Constant => (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt(),
            Family::Quadratic { m } => {
                let mut q = T::cst(0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        q = q + (x[i] * x[j]).scale(m[i][j]);
                    }
                }
                q.sqrt()
            }
            Family::FourierPerturbed { base, amplitude, modes } => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let l_max = modes.iter().map(|m| m.l).max().unwrap_or(0);
                let ys = sh::eval_all(x, l_max);
                let mut pert = T::cst(0.0);
                for mode in modes {
                    pert = pert + ys[sh::coeff_index(mode.l, mode.m)].scale(mode.weight);
                }
                base.extension(x) + r * pert.scale(*amplitude)
            }
        }
    }
}

/// `(F, DF, D²F)` at a unit vector; derivatives are tangent, stored ambiently.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrandEval {
    pub f: f64,
    pub df: Vec3,
    pub d2f: Mat3,
}

/// `A_F` at a base point, expressed in the deterministic tangent frame there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropyMatrix {
    pub nu: Vec3,
    pub frame: (Vec3, Vec3),
    pub matrix: Mat2,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeValue {
    pub value: f64,
    pub gradient: Vec3,
    /// Maximizing normal direction.
    pub maximizer: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integrand {
    family: Family,
    ellipticity_margin: f64,
}

const UNIT_TOL: f64 = 1e-12;
const ELLIPTICITY_SAMPLE_LEVEL: usize = 4;
const GAUGE_SAMPLE_LEVEL: usize = 4;
const GAUGE_ASCENT_STEPS: usize = 10;

fn sample_directions() -> &'static SphereMesh {
    static SAMPLE: OnceLock<SphereMesh> = OnceLock::new();
    SAMPLE.get_or_init(|| mesh::build_icosphere(GAUGE_SAMPLE_LEVEL.max(ELLIPTICITY_SAMPLE_LEVEL)))
}

fn check_unit(nu: Vec3) -> Result<()> {
    let n = geom::norm(nu);
    if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
        return Err(Error::Domain(format!("expected a unit vector, got |nu| = {n}")));
    }
    Ok(())
}

impl Integrand {
    /// Validates the family (positivity and ellipticity over a dense sample).
    pub fn new(family: Family) -> Result<Self> {
        if let Family::Quadratic { m } = &family {
            for i in 0..3 {
                for j in 0..3 {
                    if (m[i][j] - m[j][i]).abs() > 1e-14 * (1.0 + m[i][j].abs()) {
                        return Err(Error::Domain("quadratic-form matrix must be symmetric".into()));
                    }
                }
            }
            let eig = Matrix3::from_fn(|i, j| m[i][j]).symmetric_eigenvalues();
            if eig.min() <= 0.0 {
                return Err(Error::Domain("quadratic-form matrix must be positive definite".into()));
            }
        }
        let mut integrand = Self { family, ellipticity_margin: f64::NAN };
        let dirs = &sample_directions().vertices;
        let checks: Vec<(f64, f64, Vec3)> = dirs
            .par_iter()
            .map(|nu| {
                let f = integrand.value(*nu);
                let a = integrand.anisotropy_unchecked(*nu);
                (f, a.min_eigenvalue, *nu)
            })
            .collect();
        let mut margin = f64::INFINITY;
        for (f, min_eig, nu) in checks {
            if f <= 0.0 || !f.is_finite() {
                return Err(Error::Domain(format!("integrand not positive at {nu:?}: F = {f}")));
            }
            if min_eig <= 0.0 {
                return Err(Error::Ellipticity { nu, min_eig });
            }
            margin = margin.min(min_eig);
        }
        integrand.ellipticity_margin = margin;
        Ok(integrand)
    }

    pub fn constant() -> Self {
        Self::new(Family::Constant).expect("constant integrand is elliptic")
    }

    pub fn quadratic(m: Mat3) -> Result<Self> {
        Self::new(Family::Quadratic { m })
    }

    /// `F(ν) = sqrt(a²ν₁² + b²ν₂² + c²ν₃²)`, whose Wulff shape is the ellipsoid
    /// with semi-axes `(a, b, c)`.
    pub fn ellipsoidal(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::quadratic([[a * a, 0.0, 0.0], [0.0, b * b, 0.0], [0.0, 0.0, c * c]])
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.family, Family::Constant)
    }

    /// Smallest eigenvalue of `A_F` over the validation sample.
    pub fn ellipticity_margin(&self) -> f64 {
        self.ellipticity_margin
    }

    /// The 1-homogeneous extension `F̄(x)`.
    pub fn extension<T: Real>(&self, x: [T; 3]) -> T {
        self.family.extension(x)
    }

    pub fn value(&self, nu: Vec3) -> f64 {
        self.family.extension(nu)
    }

    /// Cahn–Hoffman map `ν ↦ ∇F̄(ν)`, generic so it can be differentiated again.
    pub fn wulff_point<T: Real>(&self, nu: [T; 3]) -> [T; 3] {
        let x = [0, 1, 2].map(|k| Dual::<T, 3>::var(nu[k], k));
        let f = self.family.extension(x);
        f.d
    }

    fn hessian_parts(&self, nu: Vec3) -> (f64, Vec3, Mat3) {
        jet3_parts(&self.family.extension(jet3_point(nu)))
    }

    pub fn evaluate(&self, nu: Vec3) -> Result<IntegrandEval> {
        check_unit(nu)?;
        let (f, g, h) = self.hessian_parts(nu);
        let p = projector(nu);
        let df = geom::sub(g, geom::scale(nu, dot(g, nu)));
        let phat = mat3_mul(&p, &mat3_mul(&h, &p));
        let mut d2f = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                d2f[i][j] = phat[i][j] - f * p[i][j];
            }
        }
        Ok(IntegrandEval { f, df, d2f })
    }

    /// `A_F(ν)` as an ambient matrix acting on `T_ν S²` (zero on `ν`).
    pub fn ambient_anisotropy(&self, nu: Vec3) -> Mat3 {
        let (_, _, h) = self.hessian_parts(nu);
        let p = projector(nu);
        mat3_mul(&p, &mat3_mul(&h, &p))
    }

    fn anisotropy_unchecked(&self, nu: Vec3) -> AnisotropyMatrix {
        let (e1, e2) = geom::tangent_frame(nu);
        let a = self.ambient_anisotropy(nu);
        let m = geom::restrict(&a, e1, e2);
        let sym = [[m[0][0], 0.5 * (m[0][1] + m[1][0])], [0.5 * (m[0][1] + m[1][0]), m[1][1]]];
        AnisotropyMatrix {
            nu,
            frame: (e1, e2),
            matrix: sym,
            min_eigenvalue: geom::sym2_eigenvalues(&sym)[0],
        }
    }

    pub fn anisotropy(&self, nu: Vec3) -> Result<AnisotropyMatrix> {
        check_unit(nu)?;
        let a = self.anisotropy_unchecked(nu);
        if a.min_eigenvalue <= 0.0 {
            return Err(Error::Ellipticity { nu, min_eig: a.min_eigenvalue });
        }
        Ok(a)
    }

    /// `A_F(ν)` restricted to an arbitrary orthonormal frame of `T_ν S²`.
    pub fn anisotropy_in_frame(&self, nu: Vec3, e1: Vec3, e2: Vec3) -> Mat2 {
        geom::restrict(&self.ambient_anisotropy(nu), e1, e2)
    }

    /// Gauge `F*(x) = sup_ν ⟨x, ν⟩ / F(ν)`, with gradient `ν*/F(ν*)`.
    pub fn gauge(&self, x: Vec3) -> Result<GaugeValue> {
        if geom::norm(x) == 0.0 || !x.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain("gauge is evaluated at a nonzero finite point".into()));
        }
        let ratio = |nu: Vec3| dot(x, nu) / self.value(nu);
        let dirs = &sample_directions().vertices;
        let mut best = dirs[0];
        let mut best_val = ratio(best);
        for d in dirs.iter().skip(1) {
            let v = ratio(*d);
            if v > best_val {
                best_val = v;
                best = *d;
            }
        }
        let mut nu = best;
        for _ in 0..GAUGE_ASCENT_STEPS {
            let (e1, e2) = geom::tangent_frame(nu);
            let s = jet2_var(0.0, 0);
            let t = jet2_var(0.0, 1);
            let y: [Jet2; 3] = [0, 1, 2].map(|k| s.scale(e1[k]) + t.scale(e2[k]) + Jet2::cst(nu[k]));
            let num = y[0].scale(x[0]) + y[1].scale(x[1]) + y[2].scale(x[2]);
            let (_, g, h) = jet2_parts(&(num / self.family.extension(y)));
            let det = geom::mat2_det(&h);
            let mut step = if h[0][0] < 0.0 && det > 0.0 {
                let inv = geom::mat2_inv(&h);
                let d = geom::mat2_apply(&inv, g);
                [-d[0], -d[1]]
            } else {
                [0.1 * g[0], 0.1 * g[1]]
            };
            let len = step[0].hypot(step[1]);
            if len > 0.5 {
                step = [step[0] * 0.5 / len, step[1] * 0.5 / len];
            }
            if len == 0.0 {
                break;
            }
            nu = geom::normalize(geom::add(nu, geom::add(geom::scale(e1, step[0]), geom::scale(e2, step[1]))));
        }
        let f = self.value(nu);
        Ok(GaugeValue { value: dot(x, nu) / f, gradient: geom::scale(nu, 1.0 / f), maximizer: nu })
    }

    /// Stable short identifier of the family and its parameters.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{:?}", self.family).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Discretized Wulff shape through the normal parametrization over an
    /// icosphere of normal directions.
    pub fn build_wulff(&self, level: usize) -> Result<WulffMesh> {
        let sphere = mesh::build_sphere_mesh(level)?;
        WulffMesh::from_sphere(self, sphere)
    }
}

fn projector(nu: Vec3) -> Mat3 {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = if i == j { 1.0 } else { 0.0 } - nu[i] * nu[j];
        }
    }
    p
}

fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Discretized Wulff shape `W = {F* = 1}`.
#[derive(Clone, Debug)]
pub struct WulffMesh {
    pub level: usize,
    /// Normal-direction parameter mesh; vertex `i` of `W` has normal `sphere.vertices[i]`.
    pub sphere: SphereMesh,
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub frames: Vec<(Vec3, Vec3)>,
    /// `A_F(ν_i)` in the vertex frame; equals the differential of the normal
    /// parametrization.
    pub anisotropy: Vec<Mat2>,
    /// Induced metric `ω` in the normal-parameter chart (`A_F²`).
    pub metric: Vec<Mat2>,
    /// Area weights `det A_F(ν_i) · w_i`.
    pub weights: Vec<f64>,
    pub integrand_hash: String,
    pub integrand: Integrand,
}

impl WulffMesh {
    pub fn from_sphere(integrand: &Integrand, sphere: SphereMesh) -> Result<Self> {
        let per_vertex: Vec<Result<(Vec3, Mat2)>> = sphere
            .vertices
            .par_iter()
            .zip(sphere.frames.par_iter())
            .map(|(nu, (e1, e2))| {
                let a = integrand.anisotropy_in_frame(*nu, *e1, *e2);
                let eig = geom::sym2_eigenvalues(&a);
                if eig[0] <= 0.0 {
                    return Err(Error::Ellipticity { nu: *nu, min_eig: eig[0] });
                }
                Ok((integrand.wulff_point(*nu), a))
            })
            .collect();
        let mut vertices = Vec::with_capacity(sphere.len());
        let mut anisotropy = Vec::with_capacity(sphere.len());
        for r in per_vertex {
            let (x, a) = r?;
            vertices.push(x);
            anisotropy.push(a);
        }
        let metric = anisotropy.iter().map(|a| geom::mat2_mul(a, a)).collect();
        let weights = anisotropy.iter().zip(&sphere.weights).map(|(a, w)| geom::mat2_det(a) * w).collect();
        Ok(Self {
            level: sphere.level,
            vertices,
            normals: sphere.vertices.clone(),
            frames: sphere.frames.clone(),
            anisotropy,
            metric,
            weights,
            integrand_hash: integrand.hash(),
            integrand: integrand.clone(),
            sphere,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        mesh::deterministic_sum(self.weights.iter().copied())
    }

    /// Classical mean curvature of `W`, `tr A_F⁻¹`, per vertex.
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.anisotropy.iter().map(|a| geom::mat2_trace(&geom::mat2_inv(a))).collect()
    }

    /// Largest principal curvature (largest eigenvalue of `A_F⁻¹`).
    pub fn max_principal_curvature(&self) -> f64 {
        self.anisotropy
            .iter()
            .map(|a| 1.0 / geom::sym2_eigenvalues(a)[0])
            .fold(0.0, f64::max)
    }

    /// Tubular-neighborhood reach used by the radial parametrization.
    pub fn reach(&self) -> f64 {
        0.9 / self.max_principal_curvature()
    }

    pub fn domain(&self) -> Domain {
        Domain {
            positions: self.vertices.clone(),
            normals: self.normals.clone(),
            frames: self.frames.clone(),
            weights: self.weights.clone(),
            neighbors: self.sphere.neighbors.clone(),
            round_sphere: self.integrand.is_isotropic(),
        }
    }

    pub fn edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (i, nb) in self.sphere.neighbors.iter().enumerate() {
            for &j in nb {
                if j > i {
                    total += geom::norm(geom::sub(self.vertices[i], self.vertices[j]));
                    count += 1;
                }
            }
        }
        total / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_evaluation() {
        let f = Integrand::constant();
        let e = f.evaluate(geom::normalize([0.2, -0.5, 0.7])).unwrap();
        assert!((e.f - 1.0).abs() < 1e-15);
        assert!(geom::norm(e.df) < 1e-15);
        assert!(e.d2f.iter().flatten().all(|v| v.abs() < 1e-15));
        let a = f.anisotropy([0.0, 0.0, 1.0]).unwrap();
        assert!((a.min_eigenvalue - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_value_at_pole() {
        let f = Integrand::quadratic([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 4.0]]).unwrap();
        assert_eq!(f.evaluate([0.0, 0.0, 1.0]).unwrap().f, 2.0);
    }

    #[test]
    fn non_unit_input_is_rejected() {
        let f = Integrand::constant();
        assert!(matches!(f.evaluate([0.0, 0.0, 1.1]), Err(Error::Domain(_))));
        assert!(matches!(f.anisotropy([1.0, 1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn gauge_domain_error_at_origin() {
        assert!(Integrand::constant().gauge([0.0; 3]).is_err());
    }

    #[test]
    fn non_elliptic_perturbation_is_rejected() {
        let fam = Family::FourierPerturbed {
            base: Box::new(Family::Constant),
            amplitude: 0.2,
            modes: vec![Mode { l: 6, m: 0, weight: 1.0 }],
        };
        assert!(matches!(Integrand::new(fam), Err(Error::Ellipticity { .. })));
    }

    #[test]
    fn indefinite_form_rejected() {
        assert!(Integrand::quadratic([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn analytic_anisotropy_is_exactly_symmetric() {
        let f = Integrand::ellipsoidal(1.0, 1.5, 2.0).unwrap();
        let a = f.anisotropy(geom::normalize([0.3, 0.4, -0.5])).unwrap();
        assert_eq!(a.matrix[0][1], a.matrix[1][0]);
    }
}
