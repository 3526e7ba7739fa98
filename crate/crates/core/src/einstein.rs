//! Eigenvalue algebra of hypersurfaces in `R^{n+1}`, `n ≥ 3`: Ricci spectra
//! from principal curvatures, pinching inequalities, the deviation polynomials
//! `p` and `q`, their zero sets and ratio bounds, and the exponent `α`.
//!
//! All quantities are pointwise functions of the sorted principal curvatures
//! `λ₁ ≤ … ≤ λ_n` and the normalized scalar curvature `κ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::nelder_mead;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    lambda: Vec<f64>,
    pub kappa: f64,
}

impl EigenSpectrum {
    /// Sorts the eigenvalues; requires `n ≥ 3` finite entries.
    pub fn new(mut lambda: Vec<f64>, kappa: f64) -> Result<Self> {
        if lambda.len() < 3 {
            return Err(Error::Domain(format!("dimension must be at least 3, got {}", lambda.len())));
        }
        if lambda.iter().any(|l| !l.is_finite()) || !kappa.is_finite() {
            return Err(Error::Domain("eigenvalues and kappa must be finite".into()));
        }
        lambda.sort_by(f64::total_cmp);
        Ok(Self { lambda, kappa })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
}

/// `Λ_j = λ_j Σ_{k≠j} λ_k`.
pub fn ricci_spectrum(spec: &EigenSpectrum) -> Vec<f64> {
    ricci_eigenvalues(spec.lambda())
}

fn ricci_eigenvalues(lambda: &[f64]) -> Vec<f64> {
    (0..lambda.len())
        .map(|j| lambda[j] * lambda.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, l)| l).sum::<f64>())
        .collect()
}

fn trace_free_sq(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinchingCheck {
    /// `|Ric̊|²`.
    pub ricci_side: f64,
    /// `constant · Λ² |h̊|²`.
    pub shape_side: f64,
    pub pass: bool,
}

fn pinching_with(spec: &EigenSpectrum, lambda_low: f64, constant: f64) -> Option<PinchingCheck> {
    if !(lambda_low > 0.0) || spec.lambda()[0] < lambda_low {
        return None;
    }
    let ricci_side = trace_free_sq(&ricci_spectrum(spec));
    let shape_side = constant * lambda_low * lambda_low * trace_free_sq(spec.lambda());
    // Relative slack absorbs rounding in the umbilic case where both sides vanish.
    let pass = ricci_side >= shape_side * (1.0 - 1e-12) - 1e-300;
    Some(PinchingCheck { ricci_side, shape_side, pass })
}

/// `|Ric̊|² ≥ (n−1) Λ² |h̊|²` for spectra with `λ_j ≥ Λ`; `None` when the
/// lower bound does not hold.
pub fn pinching_check(spec: &EigenSpectrum, lambda_low: f64) -> Option<PinchingCheck> {
    pinching_with(spec, lambda_low, (spec.n() - 1) as f64)
}

/// The same inequality with the constant `(n−2)²`, which follows from
/// `Λ_i − Λ_j = (λ_i − λ_j) Σ_{k≠i,j} λ_k` with `n − 2` summands.
pub fn sharp_pinching_check(spec: &EigenSpectrum, lambda_low: f64) -> Option<PinchingCheck> {
    let m = (spec.n() - 2) as f64;
    pinching_with(spec, lambda_low, m * m)
}

/// `(p, q)` with `p = Σ_{i≠j} (λ_iλ_j − κ)²` and `q = Σ_i (Λ_i − (n−1)κ)²`.
pub fn polys(spec: &EigenSpectrum) -> (f64, f64) {
    poly_values(spec.lambda(), spec.kappa)
}

fn poly_values(lambda: &[f64], kappa: f64) -> (f64, f64) {
    let n = lambda.len();
    let mut p = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = lambda[i] * lambda[j] - kappa;
                p += d * d;
            }
        }
    }
    let target = (n - 1) as f64 * kappa;
    let q = ricci_eigenvalues(lambda).iter().map(|l| (l - target) * (l - target)).sum();
    (p, q)
}

/// Analytic common zeros of `p` and `q` (on the unit sphere when `κ = 0`).
pub fn analytic_zeros(n: usize, kappa: f64) -> Vec<Vec<f64>> {
    if kappa < 0.0 {
        Vec::new()
    } else if kappa == 0.0 {
        let mut out = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = s;
                out.push(e);
            }
        }
        out
    } else {
        let r = kappa.sqrt();
        vec![vec![r; n], vec![-r; n]]
    }
}

/// Distance from `λ` to the analytic zero set (coordinate axes when `κ = 0`).
pub fn distance_to_zero_set(lambda: &[f64], kappa: f64) -> f64 {
    if kappa < 0.0 {
        return f64::INFINITY;
    }
    if kappa == 0.0 {
        // Distance to the nearest coordinate axis.
        let total: f64 = lambda.iter().map(|l| l * l).sum();
        let max_sq = lambda.iter().map(|l| l * l).fold(0.0, f64::max);
        return (total - max_sq).max(0.0).sqrt();
    }
    analytic_zeros(lambda.len(), kappa)
        .iter()
        .map(|z| z.iter().zip(lambda).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

const BATCH: usize = 10_000;

fn batches(samples: usize) -> Vec<(u64, usize)> {
    let full = samples / BATCH;
    let mut out: Vec<(u64, usize)> = (0..full as u64).map(|b| (b, BATCH)).collect();
    if !samples.is_multiple_of(BATCH) {
        out.push((full as u64, samples % BATCH));
    }
    out
}

/// Outcome of the zero-set comparison for one `(n, κ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSetReport {
    pub n: usize,
    pub kappa: f64,
    /// `max (p + q)` over the analytic zeros.
    pub analytic_residual: f64,
    /// Local minima where one polynomial vanished and the other did not,
    /// or vanished away from the analytic set.
    pub mismatches: usize,
    /// Local minima that reached a zero of `p` or `q`.
    pub zeros_found: usize,
    /// Smallest `p + q` among samples outside balls around the analytic zeros.
    pub min_off_zero: f64,
    pub starts: usize,
    pub pass: bool,
}

const ZERO_TOL: f64 = 1e-16;
const BALL_RADIUS: f64 = 0.1;

/// Compares the zero sets of `p` and `q` by local minimization from random
/// starts and by sampling outside small balls around the analytic zeros.
///
/// For `κ = 0` both polynomials are 4-homogeneous, so the search runs on the
/// unit sphere of spectra.
pub fn verify_zero_sets(n: usize, kappa: f64, starts: usize, seed: u64) -> Result<ZeroSetReport> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension must be at least 3, got {n}")));
    }
    let scale = kappa.abs().sqrt().max(1.0);
    let project = |x: &[f64]| -> Vec<f64> { if kappa == 0.0 { normalized(x) } else { x.to_vec() } };
    let analytic_residual = analytic_zeros(n, kappa)
        .iter()
        .map(|z| {
            let (p, q) = poly_values(z, kappa);
            p + q
        })
        .fold(0.0, f64::max);

    let results: Vec<(usize, usize, f64)> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = batch_rng(seed, s as u64);
            let x0: Vec<f64> = gaussian_vector(&mut rng, n).iter().map(|v| v * scale).collect();
            let mut mismatches = 0;
            let mut zeros = 0;
            for which in 0..2 {
                let obj = |x: &[f64]| {
                    let (p, q) = poly_values(&project(x), kappa);
                    if which == 0 { p } else { q }
                };
                let mut best = nelder_mead(obj, &x0, 0.3 * scale, 4000, 0.0);
                // Restart from the minimizer to escape a collapsed simplex.
                for _ in 0..3 {
                    best = nelder_mead(obj, &best.1, 1e-3 * scale, 4000, 0.0);
                }
                let x = project(&best.1);
                let (p, q) = poly_values(&x, kappa);
                let own = if which == 0 { p } else { q };
                let other = if which == 0 { q } else { p };
                let s4 = scale.powi(4);
                if own <= ZERO_TOL * s4 {
                    zeros += 1;
                    let near = distance_to_zero_set(&x, kappa) <= 1e-4 * scale;
                    if other > 1e-6 * s4 || !near {
                        mismatches += 1;
                    }
                }
            }
            // Sampling away from the analytic zeros.
            let mut min_off: f64 = f64::INFINITY;
            for _ in 0..64 {
                let x = project(&gaussian_vector(&mut rng, n).iter().map(|v| v * scale).collect::<Vec<_>>());
                if distance_to_zero_set(&x, kappa) > BALL_RADIUS * scale {
                    let (p, q) = poly_values(&x, kappa);
                    min_off = min_off.min(p + q);
                }
            }
            (mismatches, zeros, min_off)
        })
        .collect();
    let mismatches = results.iter().map(|r| r.0).sum();
    let zeros_found = results.iter().map(|r| r.1).sum();
    let min_off_zero = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let pass = mismatches == 0 && analytic_residual <= 1e-20 * scale.powi(4) && min_off_zero > 0.0;
    Ok(ZeroSetReport { n, kappa, analytic_residual, mismatches, zeros_found, min_off_zero, starts, pass })
}

/// Sampled bounds `c₁ ≤ p/q ≤ c₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioBound {
    pub n: usize,
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
    pub samples: usize,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
}

/// Default bound on `|κ|` accepted by [`ratio_bounds`].
pub const KAPPA_BOUND: f64 = 10.0;

#[derive(Clone, Copy)]
enum Regime {
    /// Unit sphere of spectra with the homogeneous (`κ = 0`) polynomials.
    Sphere,
    /// Gaussian bulk at scale `sqrt|κ|`.
    Bulk,
    /// Shrinking balls around the analytic zeros.
    NearZero,
}

/// Extremes of `p/q` from stratified sampling (sphere, bulk, shrinking balls
/// around zeros) followed by local refinement of both extremizers.
pub fn ratio_bounds(n: usize, kappa: f64, samples: usize, seed: u64) -> Result<RatioBound> {
    ratio_bounds_with(n, kappa, samples, seed, KAPPA_BOUND)
}

pub fn ratio_bounds_with(n: usize, kappa: f64, samples: usize, seed: u64, kappa_bound: f64) -> Result<RatioBound> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension must be at least 3, got {n}")));
    }
    if !(kappa.abs() <= kappa_bound) {
        return Err(Error::Domain(format!("|kappa| = {} exceeds the bound {kappa_bound}", kappa.abs())));
    }
    if samples == 0 {
        return Err(Error::Domain("sample budget must be positive".into()));
    }
    let scale = kappa.abs().sqrt().max(1.0);
    let zeros = analytic_zeros(n, kappa);
    let regimes: &[Regime] = if kappa == 0.0 { &[Regime::Sphere, Regime::NearZero] } else { &[Regime::Sphere, Regime::Bulk, Regime::NearZero] };
    let ratio_at = |x: &[f64], regime: Regime| -> Option<f64> {
        let k = if matches!(regime, Regime::Sphere) { 0.0 } else { kappa };
        let (p, q) = poly_values(x, k);
        (q > 0.0 && q.is_finite() && p.is_finite()).then(|| p / q)
    };

    type Extremes = (f64, Vec<f64>, f64, Vec<f64>, usize);
    let per_batch: Vec<Extremes> = batches(samples)
        .into_par_iter()
        .map(|(b, count)| {
            let mut rng = batch_rng(seed, b);
            let mut lo = (f64::INFINITY, Vec::new());
            let mut hi = (f64::NEG_INFINITY, Vec::new());
            let mut used = 0;
            for s in 0..count {
                let regime = regimes[s % regimes.len()];
                let x = loop {
                    let g = gaussian_vector(&mut rng, n);
                    let candidate = match regime {
                        Regime::Sphere => normalized(&g),
                        Regime::Bulk => g.iter().map(|v| v * scale).collect(),
                        Regime::NearZero if zeros.is_empty() => g.iter().map(|v| v * scale).collect(),
                        Regime::NearZero => {
                            let z = &zeros[rng.gen_range(0..zeros.len())];
                            let radius = scale * 10f64.powf(-rng.gen_range(1.0..6.0));
                            let d = normalized(&g);
                            let y: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + radius * b).collect();
                            if kappa == 0.0 { normalized(&y) } else { y }
                        }
                    };
                    // Measure-zero guard: resample exact zeros of q.
                    if ratio_at(&candidate, regime).is_some() {
                        break candidate;
                    }
                };
                let r = ratio_at(&x, regime).expect("guarded above");
                used += 1;
                if r < lo.0 {
                    lo = (r, x.clone());
                }
                if r > hi.0 {
                    hi = (r, x);
                }
            }
            (lo.0, lo.1, hi.0, hi.1, used)
        })
        .collect();
    // Merge in batch order so ties resolve identically for any thread count.
    let mut c1 = (f64::INFINITY, Vec::new());
    let mut c2 = (f64::NEG_INFINITY, Vec::new());
    let mut used = 0;
    for (l, lx, h, hx, u) in per_batch {
        used += u;
        if l < c1.0 {
            c1 = (l, lx);
        }
        if h > c2.0 {
            c2 = (h, hx);
        }
    }
    // Local refinement of both extremizers; the homogeneous ratio lives on the sphere.
    let refine = |start: &[f64], sign: f64| -> (f64, Vec<f64>) {
        let homogeneous = kappa == 0.0 || (start.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12;
        let k = if homogeneous { 0.0 } else { kappa };
        let obj = |x: &[f64]| {
            let y = if homogeneous { normalized(x) } else { x.to_vec() };
            let (p, q) = poly_values(&y, k);
            if q > 0.0 && q.is_finite() { sign * p / q } else { f64::INFINITY }
        };
        let (v, x) = nelder_mead(obj, start, 1e-2, 2000, 1e-15);
        (sign * v, if homogeneous { normalized(&x) } else { x })
    };
    if !c1.1.is_empty() {
        let (v, x) = refine(&c1.1, 1.0);
        if v < c1.0 {
            c1 = (v, x);
        }
    }
    if !c2.1.is_empty() {
        let (v, x) = refine(&c2.1, -1.0);
        if v > c2.0 {
            c2 = (v, x);
        }
    }
    Ok(RatioBound { n, kappa, c1: c1.0, c2: c2.0, samples: used, argmin: c1.1, argmax: c2.1 })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PinchingSweep {
    pub samples: usize,
    pub violations: usize,
    pub sharp_violations: usize,
}

/// Monte Carlo over spectra with `λ_j ≥ Λ > 0`, counting violations of the
/// stated and the sharp pinching inequalities.
pub fn pinching_sweep(n: usize, samples: usize, seed: u64) -> Result<PinchingSweep> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension must be at least 3, got {n}")));
    }
    let counts: Vec<PinchingSweep> = batches(samples)
        .into_par_iter()
        .map(|(b, count)| {
            let mut rng = batch_rng(seed ^ 0x9e37_79b9_7f4a_7c15, b);
            let mut out = PinchingSweep::default();
            for _ in 0..count {
                let low: f64 = rng.gen_range(0.05..2.0);
                let lambda: Vec<f64> = (0..n).map(|_| low + rng.gen_range(0.0..5.0)).collect();
                let spec = EigenSpectrum::new(lambda, 0.0).expect("n >= 3 finite");
                let stated = pinching_check(&spec, low).expect("lower bound holds by construction");
                let sharp = sharp_pinching_check(&spec, low).expect("lower bound holds by construction");
                out.samples += 1;
                out.violations += usize::from(!stated.pass);
                out.sharp_violations += usize::from(!sharp.pass);
            }
            out
        })
        .collect();
    Ok(counts.into_iter().fold(PinchingSweep::default(), |a, b| PinchingSweep {
        samples: a.samples + b.samples,
        violations: a.violations + b.violations,
        sharp_violations: a.sharp_violations + b.sharp_violations,
    }))
}

/// `α(p, q)`: `1` for `n < q ≤ p/2`, `p/q − 1` for `p/2 ≤ q < p`.
pub fn alpha_exponent(n: usize, p: f64, q: f64) -> Result<f64> {
    if !(q > n as f64 && q < p) {
        return Err(Error::Domain(format!("need n < q < p, got n = {n}, q = {q}, p = {p}")));
    }
    Ok(if q <= p / 2.0 { 1.0 } else { p / q - 1.0 })
}
