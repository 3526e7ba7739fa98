//! Stability operator of the Wulff shape, its translation kernel, centering
//! of radial graphs, and deficit-versus-distance sweeps.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{surface_deficit, DeficitReport};
use crate::error::{Error, Result};
use crate::geom::{self, dot, Vec3};
use crate::integrand::{Integrand, WulffMesh};
use crate::mesh::{self, DiffOperator, ScalarField};
use crate::sh::SpectralField;
use crate::surface::{self, Base, SurfaceModel, CERTIFICATE_THRESHOLD};

/// `L[u] = div_W(A_F ∇_W u) + H u` by local fits on the Wulff mesh.
pub fn stability_operator(wulff: &WulffMesh, u: &ScalarField) -> Result<ScalarField> {
    let op = DiffOperator::new(&wulff.domain())?;
    stability_operator_with(wulff, &op, u)
}

/// As [`stability_operator`], reusing a prebuilt operator on `wulff.domain()`.
pub fn stability_operator_with(wulff: &WulffMesh, op: &DiffOperator, u: &ScalarField) -> Result<ScalarField> {
    if u.len() != wulff.len() {
        return Err(Error::Domain(format!("field has {} values for {} nodes", u.len(), wulff.len())));
    }
    let grad = op.gradient(&u.values);
    // A_F(ν) acts on T_ν S², which is the tangent plane of W at X(ν).
    let flux: Vec<Vec3> = (0..wulff.len())
        .into_par_iter()
        .map(|i| {
            let a = wulff.integrand.ambient_anisotropy(wulff.normals[i]);
            let g = grad[i];
            [0, 1, 2].map(|r| a[r][0] * g[0] + a[r][1] * g[1] + a[r][2] * g[2])
        })
        .collect();
    let div = op.divergence(&flux);
    let mean = wulff.mean_curvature();
    let values = (0..wulff.len()).map(|i| div[i] + mean[i] * u.values[i]).collect();
    Ok(ScalarField::nodal(values))
}

/// `φ_c = ⟨c, ν_W⟩` at the nodes of a base.
pub fn kernel_field(base: Base<'_>, c: Vec3) -> ScalarField {
    let values = base.directions().iter().map(|nu| dot(c, *nu)).collect();
    let spectral = matches!(base, Base::Sphere(_)).then(|| SpectralField::linear(c));
    ScalarField { values, spectral }
}

/// `‖L[φ_c]‖_{L²} / ‖φ_c‖_{L²}` on one Wulff mesh.
pub fn kernel_ratio(w: &WulffMesh, op: &DiffOperator, c: Vec3) -> Result<f64> {
    let phi = kernel_field(Base::Wulff(w), c);
    let l = stability_operator_with(w, op, &phi)?;
    Ok(mesh::lp_norm(&l.values, &w.weights, 2.0)? / mesh::lp_norm(&phi.values, &w.weights, 2.0)?)
}

/// Rayleigh quotient `⟨L u, u⟩ / ⟨u, u⟩` of a harmonic sampled at the normals.
pub fn rayleigh_quotient(w: &WulffMesh, op: &DiffOperator, l: usize, m: i64) -> Result<f64> {
    let u = ScalarField::sample(&w.normals, &SpectralField::harmonic(l, m, 1.0));
    let lu = stability_operator_with(w, op, &u)?;
    let d = w.domain();
    Ok(d.inner(&lu.values, &u.values) / d.inner(&u.values, &u.values))
}

/// Discrete-`L²` orthonormal frame of the translation modes.
#[derive(Clone, Debug)]
pub struct KernelFrame {
    pub vectors: [Vec3; 3],
    pub fields: [Vec<f64>; 3],
    /// `max |⟨φ_i, φ_j⟩ − δ_ij|`.
    pub gram_residual: f64,
    weights: Vec<f64>,
}

const GRAM_CONDITION_FLOOR: f64 = 1e-6;

impl KernelFrame {
    /// Gram–Schmidt on `⟨e_k, ν⟩` with respect to the base quadrature.
    pub fn new(base: Base<'_>) -> Result<Self> {
        let dirs = base.directions();
        let weights = base.weights().to_vec();
        let inner = |a: &[f64], b: &[f64]| mesh::deterministic_sum(a.iter().zip(b).zip(&weights).map(|((x, y), w)| x * y * w));
        let raw: [Vec<f64>; 3] = [0, 1, 2].map(|k| dirs.iter().map(|d| d[k]).collect());
        let gram = Matrix3::from_fn(|i, j| inner(&raw[i], &raw[j]));
        let eig = gram.symmetric_eigenvalues();
        let cond = eig.min() / eig.max();
        if !(cond >= GRAM_CONDITION_FLOOR) {
            return Err(Error::DegenerateGram(cond));
        }
        let mut vectors = [[0.0; 3]; 3];
        let mut fields: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for k in 0..3 {
            let mut v = [0.0; 3];
            v[k] = 1.0;
            let mut f = raw[k].clone();
            // Two passes of modified Gram–Schmidt keep orthogonality at roundoff.
            for _ in 0..2 {
                for j in 0..k {
                    let proj = inner(&f, &fields[j]);
                    for (x, y) in f.iter_mut().zip(&fields[j]) {
                        *x -= proj * y;
                    }
                    v = geom::sub(v, geom::scale(vectors[j], proj));
                }
            }
            let norm = inner(&f, &f).sqrt();
            vectors[k] = geom::scale(v, 1.0 / norm);
            fields[k] = f.iter().map(|x| x / norm).collect();
        }
        let mut gram_residual: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                gram_residual = gram_residual.max((inner(&fields[i], &fields[j]) - target).abs());
            }
        }
        Ok(Self { vectors, fields, gram_residual, weights })
    }

    /// `v_u = Σ ⟨u, φ_i⟩ w_i`.
    pub fn component(&self, u: &[f64]) -> Vec3 {
        let mut v = [0.0; 3];
        for i in 0..3 {
            let c = mesh::deterministic_sum(u.iter().zip(&self.fields[i]).zip(&self.weights).map(|((a, b), w)| a * b * w));
            v = geom::add(v, geom::scale(self.vectors[i], c));
        }
        v
    }
}

/// Centering defaults.
pub const CENTER_TOLERANCE: f64 = 1e-8;
pub const CENTER_MAX_ITERATIONS: usize = 25;

/// Stopping rule and graph-certificate threshold for [`center`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenteringOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub certificate: f64,
}

impl Default for CenteringOptions {
    fn default() -> Self {
        Self { tolerance: CENTER_TOLERANCE, max_iterations: CENTER_MAX_ITERATIONS, certificate: CERTIFICATE_THRESHOLD }
    }
}

#[derive(Clone, Debug)]
pub struct CenteringResult {
    pub c: Vec3,
    /// Number of kernel-component evaluations.
    pub iterations: usize,
    pub final_residual: f64,
    /// `|v|` at each evaluation, in order.
    pub residuals: Vec<f64>,
    /// Radius of `Σ − c` over the base at the final `c`.
    pub radius: ScalarField,
    pub margin: f64,
}

/// Fixed-point centering `c ← c + v(u_c)` with `Σ_c = Σ − c`.
pub fn center(model: &SurfaceModel, base: Base<'_>, options: &CenteringOptions) -> Result<CenteringResult> {
    let CenteringOptions { tolerance, max_iterations, certificate } = *options;
    let frame = KernelFrame::new(base)?;
    let sphere = base.sphere();
    let mut c = [0.0; 3];
    let mut residuals = Vec::new();
    let mut last_valid = c;
    for it in 1..=max_iterations {
        let geo = surface::model_geometry(model, sphere, c)?;
        let cert = surface::projection_certificate(&geo, base, certificate).map_err(|e| Error::Centering {
            iterations: it,
            last_c: last_valid,
            reason: e.to_string(),
        })?;
        let radius = match (cert.pass, cert.radius) {
            (true, Some(r)) => r,
            _ => {
                return Err(Error::Centering {
                    iterations: it,
                    last_c: last_valid,
                    reason: format!("graph property lost (margin {:.4e})", cert.margin),
                })
            }
        };
        last_valid = c;
        let v = frame.component(&radius.values);
        let r = geom::norm(v);
        if let Some(prev) = residuals.last() {
            if r >= *prev && r > tolerance {
                return Err(Error::Centering {
                    iterations: it,
                    last_c: c,
                    reason: format!(
                        "residual did not decrease ({prev:.3e} -> {r:.3e}); check the translation sign convention"
                    ),
                });
            }
        }
        residuals.push(r);
        if r <= tolerance {
            return Ok(CenteringResult { c, iterations: it, final_residual: r, residuals, radius, margin: cert.margin });
        }
        c = geom::add(c, v);
    }
    Err(Error::Centering {
        iterations: max_iterations,
        last_c: c,
        reason: format!("tolerance {tolerance:e} not reached"),
    })
}

/// Band used when re-expanding a recovered radius on the sphere.
const RECOVERY_BAND: usize = 16;

/// `W^{2,p}` norm of a radius field over a base: spectral on the sphere,
/// local fits on a Wulff mesh.
pub fn radius_w2p(u: &ScalarField, base: Base<'_>, p: f64) -> Result<f64> {
    match base {
        Base::Sphere(sphere) => {
            let coeffs = match &u.spectral {
                Some(c) => c.clone(),
                None => mesh::sh_analyze(sphere, &u.values, RECOVERY_BAND.min(sphere.band_limit()))?,
            };
            let jets = mesh::spectral_jets(&coeffs, sphere);
            mesh::w2p_from_jets(&jets, &sphere.weights, p)
        }
        Base::Wulff(w) if w.integrand.is_isotropic() => radius_w2p(u, Base::Sphere(&w.sphere), p),
        Base::Wulff(w) => {
            let domain = w.domain();
            let op = DiffOperator::new(&domain)?;
            mesh::w2p_norm(u, &domain, &op, None, p)
        }
    }
}

fn subtract_kernel(u: &ScalarField, base: Base<'_>, v: Vec3) -> ScalarField {
    let phi = kernel_field(base, v);
    let values = u.values.iter().zip(&phi.values).map(|(a, b)| a - b).collect();
    let spectral = match (&u.spectral, &phi.spectral) {
        (Some(a), Some(b)) => Some(a.add(&b.scaled(-1.0))),
        _ => None,
    };
    ScalarField { values, spectral }
}

#[derive(Clone, Debug)]
pub struct StabilityRatio {
    pub deficit: DeficitReport,
    /// `‖u − φ_{v_u}‖_{W^{2,p}}`.
    pub distance: f64,
    /// `distance / deficit`; `None` when the deficit is below `1e-14`.
    pub ratio: Option<f64>,
    pub kernel_component: Vec3,
}

/// Deficit and distance of `model − c` over `base` (expected centered at `c`).
pub fn stability_ratio(
    model: &SurfaceModel,
    c: Vec3,
    radius: &ScalarField,
    base: Base<'_>,
    integrand: &Integrand,
    p: f64,
) -> Result<StabilityRatio> {
    let geo = surface::model_geometry(model, base.sphere(), c)?;
    let deficit = surface_deficit(&geo, integrand, p)?;
    let v = KernelFrame::new(base)?.component(&radius.values);
    let distance = radius_w2p(&subtract_kernel(radius, base, v), base, p)?;
    let ratio = (deficit.deficit >= 1e-14).then(|| distance / deficit.deficit);
    Ok(StabilityRatio { deficit, distance, ratio, kernel_component: v })
}

/// Log-log least-squares fit `log y = slope · log ε + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub amplitudes: Vec<f64>,
}

impl ScalingFit {
    pub fn fit(amplitudes: &[f64], values: &[f64]) -> Result<Self> {
        if amplitudes.len() != values.len() {
            return Err(Error::Sweep("amplitude and value counts differ".into()));
        }
        if amplitudes.len() < 5 {
            return Err(Error::Sweep(format!("need at least 5 amplitudes, got {}", amplitudes.len())));
        }
        let lo = amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = amplitudes.iter().copied().fold(0.0, f64::max);
        if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-12) {
            return Err(Error::Sweep("amplitudes must be positive and span at least one decade".into()));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Sweep("fitted values must be positive".into()));
        }
        let x: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
        let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = x.len() as f64;
        let mx = mesh::deterministic_sum(x.iter().copied()) / n;
        let my = mesh::deterministic_sum(y.iter().copied()) / n;
        let sxx = mesh::deterministic_sum(x.iter().map(|a| (a - mx) * (a - mx)));
        let sxy = mesh::deterministic_sum(x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)));
        let syy = mesh::deterministic_sum(y.iter().map(|b| (b - my) * (b - my)));
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        Ok(Self { slope, intercept, r_squared, amplitudes: amplitudes.to_vec() })
    }
}

/// Shape of a perturbation, scaled by the sweep amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PerturbationFamily {
    Harmonic { l: usize, m: i64 },
    /// Translation mode `φ_c`.
    Kernel { c: Vec3 },
    Custom { field: SpectralField },
}

impl PerturbationFamily {
    pub fn field(&self) -> SpectralField {
        match self {
            PerturbationFamily::Harmonic { l, m } => SpectralField::harmonic(*l, *m, 1.0),
            PerturbationFamily::Kernel { c } => SpectralField::linear(*c),
            PerturbationFamily::Custom { field } => field.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PerturbationFamily::Harmonic { l, m } => format!("Y{l}{m}"),
            PerturbationFamily::Kernel { c } => format!("phi[{:.4};{:.4};{:.4}]", c[0], c[1], c[2]),
            PerturbationFamily::Custom { .. } => "custom".into(),
        }
    }

    pub fn is_kernel(&self) -> bool {
        matches!(self, PerturbationFamily::Kernel { .. })
    }
}

/// One amplitude of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub epsilon: f64,
    pub deficit: f64,
    pub distance: f64,
    pub ratio: Option<f64>,
    pub raw_distance: f64,
    pub margin: f64,
    pub iterations: usize,
    pub report: DeficitReport,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub family: PerturbationFamily,
    pub parametrization: Parametrization,
    pub p: f64,
    pub rows: Vec<SweepRow>,
    pub deficit_fit: ScalingFit,
    pub distance_fit: Option<ScalingFit>,
    /// Set when a certificate failed and larger amplitudes were dropped.
    pub truncated: Option<String>,
}

/// How a perturbation radius deforms the base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parametrization {
    /// `e^{εf} ν` over the unit sphere (isotropic integrand only).
    Exp,
    /// `X(ν) + εf ν` over the Wulff shape.
    Radial,
}

impl Parametrization {
    /// Exponential for non-kernel families of the isotropic integrand, radial
    /// otherwise. `e^{εφ_c}` agrees with a translated sphere up to a dilation
    /// at second order, which would hide the quadratic deficit of the kernel
    /// family.
    pub fn default_for(integrand: &Integrand, family: &PerturbationFamily) -> Self {
        if integrand.is_isotropic() && !family.is_kernel() {
            Parametrization::Exp
        } else {
            Parametrization::Radial
        }
    }
}

/// Perturbed surface for one amplitude.
pub fn perturbed_model(
    integrand: &Integrand,
    family: &PerturbationFamily,
    parametrization: Parametrization,
    epsilon: f64,
) -> Result<SurfaceModel> {
    let radius = family.field().scaled(epsilon);
    match parametrization {
        Parametrization::Exp if integrand.is_isotropic() => Ok(SurfaceModel::Exp { radius }),
        Parametrization::Exp => Err(Error::Domain("exponential parametrization needs the isotropic integrand".into())),
        Parametrization::Radial => Ok(SurfaceModel::Radial { integrand: integrand.clone(), radius }),
    }
}

/// Runs the sweep; amplitudes must be sorted ascending.
pub fn scaling_sweep(
    wulff: &WulffMesh,
    family: &PerturbationFamily,
    parametrization: Parametrization,
    amplitudes: &[f64],
    p: f64,
    options: &CenteringOptions,
) -> Result<SweepResult> {
    if amplitudes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Sweep("amplitudes must be strictly increasing".into()));
    }
    let integrand = &wulff.integrand;
    let base = match parametrization {
        Parametrization::Exp => Base::Sphere(&wulff.sphere),
        Parametrization::Radial => Base::Wulff(wulff),
    };
    let mut rows = Vec::new();
    let mut truncated = None;
    for &eps in amplitudes {
        let model = perturbed_model(integrand, family, parametrization, eps)?;
        let centered = match center(&model, base, options) {
            Ok(c) => c,
            Err(e @ Error::Centering { .. }) => {
                truncated = Some(format!("stopped at epsilon = {eps:e}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let radius = if centered.c == [0.0; 3] {
            ScalarField::sample(base.directions(), &family.field().scaled(eps))
        } else {
            centered.radius.clone()
        };
        let sr = stability_ratio(&model, centered.c, &radius, base, integrand, p)?;
        let raw = ScalarField::sample(base.directions(), &family.field().scaled(eps));
        rows.push(SweepRow {
            epsilon: eps,
            deficit: sr.deficit.deficit,
            distance: sr.distance,
            ratio: sr.ratio,
            raw_distance: radius_w2p(&raw, base, p)?,
            margin: centered.margin,
            iterations: centered.iterations,
            report: sr.deficit,
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let deficit_fit = ScalingFit::fit(&eps, &rows.iter().map(|r| r.deficit).collect::<Vec<_>>())?;
    let distances: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let distance_fit = ScalingFit::fit(&eps, &distances).ok();
    Ok(SweepResult { family: family.clone(), parametrization, p, rows, deficit_fit, distance_fit, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_fit_recovers_power_law() {
        let eps = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
        let y: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        let fit = ScalingFit::fit(&eps, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn scaling_fit_rejects_short_sweeps() {
        assert!(ScalingFit::fit(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4]).is_err());
        assert!(ScalingFit::fit(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0; 5]).is_err());
    }

    #[test]
    fn kernel_frame_is_orthonormal() {
        let s = mesh::build_sphere_mesh(3).unwrap();
        let k = KernelFrame::new(Base::Sphere(&s)).unwrap();
        assert!(k.gram_residual < 1e-12);
    }

    #[test]
    fn unsorted_amplitudes_rejected() {
        let w = Integrand::constant().build_wulff(2).unwrap();
        let fam = PerturbationFamily::Harmonic { l: 2, m: 0 };
        assert!(matches!(scaling_sweep(&w, &fam, Parametrization::Exp, &[1e-2, 1e-3], 2.0, &CenteringOptions::default()), Err(Error::Sweep(_))));
    }
}
