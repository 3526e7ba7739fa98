//! Experiment configuration: a TOML file with one table per concern.
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [integrand]
//! family = "quadratic"           # constant | quadratic | ellipsoid
//! matrix = [[1, 0, 0], [0, 1, 0], [0, 0, 4]]
//! # axes = [1, 1, 2]             # for family = "ellipsoid"
//! # amplitude = 0.05             # optional harmonic perturbation of F
//! # modes = [{ l = 2, m = 0, weight = 1.0 }]
//!
//! [mesh]
//! level = 5
//!
//! [perturbation]
//! family = "harmonic"            # harmonic | kernel | custom
//! l = 2
//! m = 0
//! # c = [0.6, 0.0, 0.8]          # for family = "kernel"
//! # l_max = 2                    # for family = "custom"
//! # coefficients = [...]         # (l_max + 1)² real harmonic coefficients
//! parametrization = "auto"       # auto | exp | radial
//! amplitudes = [1e-4, 2.5e-4, 6.3e-4, 1.6e-3, 4e-3, 1e-2]
//! p = 4.0
//!
//! [center]
//! translation = [0.03, 0.0, 0.04]  # rigid shift recovered from the base shape
//! amplitudes = [0.01, 0.02, 0.04]  # one-step residual sweep of ε(φ_d + Y_lm)
//! direction = [0.6, 0.0, 0.8]
//! l = 2
//! m = 1
//!
//! [tolerances]
//! center = 1e-8
//! max_iterations = 25
//! certificate = 0.1
//! kernel_ratio = 0.02
//! gauge = 1e-12
//!
//! [einstein]
//! dimensions = [3, 4, 5]
//! kappas = [-1.0, 0.0, 1.0]
//! samples = 1000000
//! kappa_bound = 10.0
//! zero_starts = 64
//! p = 10.0
//! q = 4.0
//! ```
//!
//! Every table and key is optional; omitted values take the defaults above.
//! Unknown keys are rejected.

use std::ops::Range;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::integrand::{Family, Integrand, Mode};
use crate::mesh::{MAX_LEVEL, MIN_LEVEL};
use crate::sh::{self, SpectralField};
use crate::stability::{Parametrization, PerturbationFamily, CENTER_MAX_ITERATIONS, CENTER_TOLERANCE};
use crate::surface::CERTIFICATE_THRESHOLD;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub integrand: IntegrandConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub center: CenterConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub einstein: EinsteinConfig,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegrandConfig {
    #[serde(default = "default_integrand_family")]
    pub family: String,
    pub matrix: Option<[[f64; 3]; 3]>,
    pub axes: Option<[f64; 3]>,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub l: usize,
    pub m: i64,
    pub weight: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_level")]
    pub level: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default = "default_perturbation_family")]
    pub family: String,
    #[serde(default = "default_l")]
    pub l: usize,
    #[serde(default)]
    pub m: i64,
    pub c: Option<Vec3>,
    pub l_max: Option<usize>,
    pub coefficients: Option<Vec<f64>>,
    #[serde(default = "default_parametrization")]
    pub parametrization: String,
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CenterConfig {
    #[serde(default = "default_translation")]
    pub translation: Vec3,
    #[serde(default = "default_center_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_direction")]
    pub direction: Vec3,
    #[serde(default = "default_l")]
    pub l: usize,
    #[serde(default = "default_center_m")]
    pub m: i64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_center_tol")]
    pub center: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_certificate")]
    pub certificate: f64,
    #[serde(default = "default_kernel_ratio")]
    pub kernel_ratio: f64,
    #[serde(default = "default_gauge")]
    pub gauge: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EinsteinConfig {
    #[serde(default = "default_dimensions")]
    pub dimensions: Vec<usize>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_kappa_bound")]
    pub kappa_bound: f64,
    #[serde(default = "default_zero_starts")]
    pub zero_starts: usize,
    #[serde(default = "default_alpha_p")]
    pub p: f64,
    #[serde(default = "default_alpha_q")]
    pub q: f64,
}

fn default_integrand_family() -> String {
    "constant".into()
}
fn default_level() -> usize {
    5
}
fn default_perturbation_family() -> String {
    "harmonic".into()
}
fn default_l() -> usize {
    2
}
fn default_parametrization() -> String {
    "auto".into()
}
/// Six log-spaced amplitudes over `[1e-4, 1e-2]`.
pub fn default_amplitudes() -> Vec<f64> {
    (0..6).map(|k| 10f64.powf(-4.0 + 2.0 * k as f64 / 5.0)).collect()
}
fn default_p() -> f64 {
    4.0
}
fn default_translation() -> Vec3 {
    [0.03, 0.0, 0.04]
}
fn default_center_amplitudes() -> Vec<f64> {
    vec![0.01, 0.02, 0.04]
}
fn default_direction() -> Vec3 {
    [0.6, 0.0, 0.8]
}
fn default_center_m() -> i64 {
    1
}
fn default_center_tol() -> f64 {
    CENTER_TOLERANCE
}
fn default_max_iterations() -> usize {
    CENTER_MAX_ITERATIONS
}
fn default_certificate() -> f64 {
    CERTIFICATE_THRESHOLD
}
fn default_kernel_ratio() -> f64 {
    0.02
}
fn default_gauge() -> f64 {
    1e-12
}
fn default_dimensions() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_kappas() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}
fn default_samples() -> usize {
    1_000_000
}
fn default_kappa_bound() -> f64 {
    crate::einstein::KAPPA_BOUND
}
fn default_zero_starts() -> usize {
    64
}
fn default_alpha_p() -> f64 {
    10.0
}
fn default_alpha_q() -> f64 {
    4.0
}

macro_rules! default_from_serde {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        }
    )*};
}
default_from_serde!(ExperimentConfig, IntegrandConfig, MeshConfig, PerturbationConfig, CenterConfig, Tolerances, EinsteinConfig);

/// 1-based line of a byte offset.
fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// 1-based line of `key` inside `[table]` (top level when `table` is empty);
/// falls back to the table header, then to line 1.
fn line_of_key(src: &str, table: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == table {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == table {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header_line.unwrap_or(1)
}

fn parse_error(src: &str, e: toml::de::Error) -> Error {
    let line = e.span().map_or(1, |r: Range<usize>| line_of_offset(src, r.start));
    Error::Config { line, message: e.message().to_string() }
}

impl ExperimentConfig {
    /// Parses and validates; every error carries the offending line.
    pub fn parse(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| parse_error(src, e))?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    fn validate(&self, src: &str) -> Result<()> {
        let fail = |table: &str, key: &str, message: String| Error::Config { line: line_of_key(src, table, key), message };
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&self.mesh.level) {
            return Err(fail("mesh", "level", format!("level {} outside [{MIN_LEVEL}, {MAX_LEVEL}]", self.mesh.level)));
        }
        let amps = &self.perturbation.amplitudes;
        if amps.is_empty() || amps.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(fail("perturbation", "amplitudes", "amplitudes must be positive and finite".into()));
        }
        if amps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(fail("perturbation", "amplitudes", "amplitudes must be strictly increasing".into()));
        }
        if !(self.perturbation.p > 1.0 && self.perturbation.p.is_finite()) {
            return Err(fail("perturbation", "p", format!("p = {} must satisfy 1 < p < inf", self.perturbation.p)));
        }
        self.integrand().map_err(|e| fail("integrand", "family", e.to_string()))?;
        self.family().map_err(|e| fail("perturbation", "family", e.to_string()))?;
        self.parametrization_choice().map_err(|e| fail("perturbation", "parametrization", e.to_string()))?;
        let cc = &self.center;
        if cc.amplitudes.len() < 2 || cc.amplitudes.iter().any(|a| !(*a > 0.0)) || cc.amplitudes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(fail("center", "amplitudes", "need at least two positive, strictly increasing amplitudes".into()));
        }
        if cc.m.unsigned_abs() as usize > cc.l || cc.l < 2 {
            return Err(fail("center", "l", format!("harmonic ({}, {}) must have l ≥ 2 and |m| ≤ l", cc.l, cc.m)));
        }
        if !cc.translation.iter().chain(&cc.direction).all(|x| x.is_finite()) {
            return Err(fail("center", "translation", "translation and direction must be finite".into()));
        }
        let t = &self.tolerances;
        for (key, v) in [("center", t.center), ("certificate", t.certificate), ("kernel_ratio", t.kernel_ratio), ("gauge", t.gauge)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail("tolerances", key, format!("{key} must be positive")));
            }
        }
        if t.max_iterations == 0 {
            return Err(fail("tolerances", "max_iterations", "max_iterations must be positive".into()));
        }
        let e = &self.einstein;
        if e.dimensions.is_empty() || e.dimensions.iter().any(|n| *n < 3) {
            return Err(fail("einstein", "dimensions", "dimensions must be at least 3".into()));
        }
        if !(e.kappa_bound > 0.0) {
            return Err(fail("einstein", "kappa_bound", "kappa_bound must be positive".into()));
        }
        if let Some(k) = e.kappas.iter().find(|k| !(k.abs() <= e.kappa_bound)) {
            return Err(fail("einstein", "kappas", format!("kappa {k} exceeds the bound {}", e.kappa_bound)));
        }
        if e.samples == 0 || e.zero_starts == 0 {
            return Err(fail("einstein", "samples", "sample budgets must be positive".into()));
        }
        Ok(())
    }

    pub fn integrand(&self) -> Result<Integrand> {
        let c = &self.integrand;
        let base = match c.family.as_str() {
            "constant" => Family::Constant,
            "quadratic" => Family::Quadratic {
                m: c.matrix.ok_or_else(|| Error::Domain("family `quadratic` needs `matrix`".into()))?,
            },
            "ellipsoid" => {
                let [a, b, cc] = c.axes.ok_or_else(|| Error::Domain("family `ellipsoid` needs `axes`".into()))?;
                if !(a > 0.0 && b > 0.0 && cc > 0.0) {
                    return Err(Error::Domain("ellipsoid axes must be positive".into()));
                }
                Family::Quadratic { m: [[a * a, 0.0, 0.0], [0.0, b * b, 0.0], [0.0, 0.0, cc * cc]] }
            }
            other => return Err(Error::Domain(format!("unknown integrand family `{other}`"))),
        };
        let family = if c.amplitude != 0.0 && !c.modes.is_empty() {
            for mode in &c.modes {
                if mode.m.unsigned_abs() as usize > mode.l {
                    return Err(Error::Domain(format!("mode ({}, {}) has |m| > l", mode.l, mode.m)));
                }
            }
            Family::FourierPerturbed {
                base: Box::new(base),
                amplitude: c.amplitude,
                modes: c.modes.iter().map(|m| Mode { l: m.l, m: m.m, weight: m.weight }).collect(),
            }
        } else {
            base
        };
        Integrand::new(family)
    }

    pub fn family(&self) -> Result<PerturbationFamily> {
        let c = &self.perturbation;
        match c.family.as_str() {
            "harmonic" => {
                if c.m.unsigned_abs() as usize > c.l {
                    return Err(Error::Domain(format!("harmonic ({}, {}) has |m| > l", c.l, c.m)));
                }
                Ok(PerturbationFamily::Harmonic { l: c.l, m: c.m })
            }
            "kernel" => {
                let v = c.c.ok_or_else(|| Error::Domain("family `kernel` needs `c`".into()))?;
                if !v.iter().all(|x| x.is_finite()) || v == [0.0; 3] {
                    return Err(Error::Domain("kernel direction must be finite and nonzero".into()));
                }
                Ok(PerturbationFamily::Kernel { c: v })
            }
            "custom" => {
                let l_max = c.l_max.ok_or_else(|| Error::Domain("family `custom` needs `l_max`".into()))?;
                let coeffs = c.coefficients.clone().ok_or_else(|| Error::Domain("family `custom` needs `coefficients`".into()))?;
                if coeffs.len() != sh::num_coeffs(l_max) {
                    return Err(Error::Domain(format!(
                        "custom field needs {} coefficients for l_max = {l_max}, got {}",
                        sh::num_coeffs(l_max),
                        coeffs.len()
                    )));
                }
                Ok(PerturbationFamily::Custom { field: SpectralField { l_max, coeffs } })
            }
            other => Err(Error::Domain(format!("unknown perturbation family `{other}`"))),
        }
    }

    fn parametrization_choice(&self) -> Result<Option<Parametrization>> {
        match self.perturbation.parametrization.as_str() {
            "auto" => Ok(None),
            "exp" => {
                if self.integrand()?.is_isotropic() {
                    Ok(Some(Parametrization::Exp))
                } else {
                    Err(Error::Domain("exp parametrization needs the constant integrand".into()))
                }
            }
            "radial" => Ok(Some(Parametrization::Radial)),
            other => Err(Error::Domain(format!("unknown parametrization `{other}`"))),
        }
    }

    /// Options handed to the centering iteration.
    pub fn centering(&self) -> crate::stability::CenteringOptions {
        crate::stability::CenteringOptions {
            tolerance: self.tolerances.center,
            max_iterations: self.tolerances.max_iterations,
            certificate: self.tolerances.certificate,
        }
    }

    pub fn parametrization(&self, integrand: &Integrand, family: &PerturbationFamily) -> Result<Parametrization> {
        Ok(self.parametrization_choice()?.unwrap_or_else(|| Parametrization::default_for(integrand, family)))
    }
}
