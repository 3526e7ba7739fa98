use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Cell, Check, ExperimentConfig, Outcome, Table};
use crate::curvature::{self, DeficitReport};
use crate::einstein::{self, EigenSpectrum};
use crate::error::Result;
use crate::geom::{self, Vec3};
use crate::integrand::{Family, Integrand, WulffMesh};
use crate::io::{field_csv, MeshText};
use crate::mesh::{self, DiffOperator, ScalarField};
use crate::sh::SpectralField;
use crate::stability::{self, Parametrization, PerturbationFamily, SweepResult};
use crate::surface::{self, Base, SurfaceModel};

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_unit(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = [r.sample(StandardNormal), r.sample(StandardNormal), r.sample(StandardNormal)];
        if geom::norm(v) > 1e-6 {
            return geom::normalize(v);
        }
    }
}

fn vec_text(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";"))
}

/// Least-squares slope of `log y` against `log x`.
pub(crate) fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `max ‖S_F − Id‖` on the undeformed Wulff shape, from local fits.
pub(crate) fn rigidity_error(wulff: &WulffMesh) -> Result<f64> {
    let geo = surface::radial_graph(wulff, &ScalarField::nodal(vec![0.0; wulff.len()]))?;
    let shape = curvature::anisotropic_shape_operator(&geo, &wulff.integrand)?;
    Ok(shape
        .s_f
        .values
        .iter()
        .map(|m| geom::mat2_frobenius(&[[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]]))
        .fold(0.0, f64::max))
}

/// Closed-form level-set residual of a Wulff vertex, when one is known.
fn closed_form_residual(integrand: &Integrand, x: Vec3) -> Option<f64> {
    match integrand.family() {
        Family::Constant => Some((geom::norm(x) - 1.0).abs()),
        Family::Quadratic { m } => {
            let inv = nalgebra::Matrix3::from_fn(|i, j| m[i][j]).try_inverse()?;
            let v = nalgebra::Vector3::new(x[0], x[1], x[2]);
            Some(((v.transpose() * inv * v)[(0, 0)] - 1.0).abs())
        }
        Family::FourierPerturbed { .. } => None,
    }
}

const ROBIN_DIRECTIONS: usize = 10;
const ROBIN_TOLERANCE: f64 = 1e-4;
const CLOSED_FORM_TOLERANCE: f64 = 1e-10;

pub fn wulff(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let integrand = cfg.integrand()?;
    let w = integrand.build_wulff(cfg.mesh.level)?;
    let mut r = rng(seed, 0);
    let dirs: Vec<Vec3> = (0..ROBIN_DIRECTIONS).map(|_| random_unit(&mut r)).collect();
    let per_node: Vec<Result<(f64, f64, f64)>> = (0..w.len())
        .into_par_iter()
        .map(|i| {
            let x = w.vertices[i];
            let nu = w.normals[i];
            let g = integrand.gauge(x)?;
            let f = integrand.value(nu);
            let robin = dirs
                .iter()
                .map(|c| (geom::dot(g.gradient, *c) - geom::dot(nu, *c) / f).abs() * f)
                .fold(0.0, f64::max);
            let closed = closed_form_residual(&integrand, x).unwrap_or(f64::NAN);
            Ok(((g.value - 1.0).abs(), robin, closed))
        })
        .collect();
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;
    let gauge: Vec<f64> = per_node.iter().map(|v| v.0).collect();
    let robin: Vec<f64> = per_node.iter().map(|v| v.1).collect();
    let closed: Vec<f64> = per_node.iter().map(|v| v.2).collect();
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);

    let mut out = Outcome::default();
    let subject = format!("{} level {}", w.integrand_hash, w.level);
    out.checks.push(Check::at_most("max_gauge_residual", subject.as_str(), max(&gauge), cfg.tolerances.gauge));
    out.checks.push(Check::at_most("max_robin_error", subject.as_str(), max(&robin), ROBIN_TOLERANCE));
    out.checks.push(Check::flag(
        "ellipticity_margin",
        subject.as_str(),
        integrand.ellipticity_margin(),
        integrand.ellipticity_margin() > 0.0,
        "> 0",
    ));
    if closed.iter().all(|v| v.is_finite()) {
        out.checks.push(Check::at_most("max_closed_form_residual", subject.as_str(), max(&closed), CLOSED_FORM_TOLERANCE));
    }
    let mut summary = Table::new("wulff", &["integrand", "level", "vertices", "edge_length", "total_area", "reach"]);
    summary.push(vec![
        w.integrand_hash.as_str().into(),
        w.level.into(),
        w.len().into(),
        w.edge_length().into(),
        w.total_area().into(),
        w.reach().into(),
    ]);
    out.tables.push(summary);
    let h = w.mean_curvature();
    out.files.push((
        "wulff_nodes.csv".into(),
        field_csv(&[("gauge_residual", &gauge), ("robin_error", &robin), ("mean_curvature", &h), ("area_weight", &w.weights)])?,
    ));
    out.files.push(("wulff.mesh".into(), MeshText::from_wulff(&w).render()));
    Ok(out)
}

fn deficit_row(label: &str, eps: f64, d: &DeficitReport) -> Vec<Cell> {
    vec![
        label.into(),
        eps.into(),
        d.p.into(),
        d.deficit.into(),
        d.lambda_star.into(),
        d.min_oscillation.into(),
        d.mean_lambda.into(),
        d.mean_oscillation.into(),
        d.c_osc.into(),
    ]
}

const DEFICIT_COLUMNS: [&str; 9] =
    ["family", "epsilon", "p", "deficit", "lambda_star", "min_oscillation", "mean_lambda", "mean_oscillation", "c_osc"];

const LAMBDA_TOLERANCE: f64 = 0.05;
const C_OSC_DRIFT: f64 = 2.0;

/// λ* against `H̄_F / n` per row, and the spread of `C_osc` over the rows.
pub(crate) fn oscillation_checks(reports: &[(f64, DeficitReport)], label: &str) -> Vec<Check> {
    let mut checks = Vec::new();
    let worst = reports
        .iter()
        .map(|(_, d)| ((d.lambda_star - d.mean_lambda) / d.mean_lambda).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("lambda_star_vs_mean", label, worst, LAMBDA_TOLERANCE));
    let c: Vec<f64> = reports.iter().map(|(_, d)| d.c_osc).collect();
    let finite = c.iter().all(|v| v.is_finite() && *v > 0.0);
    let spread = if finite {
        c.iter().copied().fold(0.0, f64::max) / c.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    checks.push(Check::at_most("c_osc_spread", label, spread, C_OSC_DRIFT));
    checks
}

fn base_for<'a>(w: &'a WulffMesh, parametrization: Parametrization) -> Base<'a> {
    match parametrization {
        Parametrization::Exp => Base::Sphere(&w.sphere),
        Parametrization::Radial => Base::Wulff(w),
    }
}

const RIGIDITY_FIRST_LEVEL: usize = 3;
const RIGIDITY_ORDER: f64 = 1.5;
/// Errors below this are rounding and carry no convergence order.
const RIGIDITY_FLOOR: f64 = 1e-10;

pub fn curvature(cfg: &ExperimentConfig) -> Result<Outcome> {
    let integrand = cfg.integrand()?;
    let family = cfg.family()?;
    let parametrization = cfg.parametrization(&integrand, &family)?;
    let mut out = Outcome::default();

    let mut rigidity = Table::new("curvature_rigidity", &["level", "edge_length", "max_sf_minus_id"]);
    let mut h = Vec::new();
    let mut e = Vec::new();
    for level in RIGIDITY_FIRST_LEVEL.min(cfg.mesh.level)..=cfg.mesh.level {
        let w = integrand.build_wulff(level)?;
        let err = rigidity_error(&w)?;
        rigidity.push(vec![level.into(), w.edge_length().into(), err.into()]);
        h.push(w.edge_length());
        e.push(err);
    }
    let subject = integrand.hash();
    if e.iter().all(|v| *v <= RIGIDITY_FLOOR) {
        out.checks.push(Check::at_most("rigidity_error", subject.as_str(), e.iter().copied().fold(0.0, f64::max), RIGIDITY_FLOOR));
    } else if e.len() >= 2 {
        out.checks.push(Check::at_least("rigidity_order", subject.as_str(), loglog_slope(&h, &e), RIGIDITY_ORDER));
        let monotone = e.windows(2).all(|p| p[1] < p[0]);
        out.checks.push(Check::flag("rigidity_monotone", subject.as_str(), e[e.len() - 1], monotone, "decreasing"));
    }
    out.tables.push(rigidity);
    out.plots.push(("curvature_rigidity".into(), "edge_length".into(), vec!["max_sf_minus_id".into()]));

    let w = integrand.build_wulff(cfg.mesh.level)?;
    let p = cfg.perturbation.p;
    let label = family.label();
    let mut deficits = Table::new("curvature_deficits", &DEFICIT_COLUMNS);
    let mut reports = Vec::new();
    let mut last = None;
    for &eps in &cfg.perturbation.amplitudes {
        let model = stability::perturbed_model(&integrand, &family, parametrization, eps)?;
        let geo = surface::model_geometry(&model, &w.sphere, [0.0; 3])?;
        let shape = curvature::anisotropic_shape_operator(&geo, &integrand)?;
        let d = curvature::oscillation_deficit(&shape.s_f, &geo.area, p)?;
        deficits.push(deficit_row(&label, eps, &d));
        reports.push((eps, d));
        last = Some((geo, shape));
    }
    if !family.is_kernel() {
        out.checks.extend(oscillation_checks(&reports, &label));
    }
    out.tables.push(deficits);
    out.plots.push(("curvature_deficits".into(), "epsilon".into(), vec!["deficit".into(), "min_oscillation".into()]));
    if let Some((geo, shape)) = last {
        let (ring, _) = curvature::trace_free(&shape.s_f);
        let ring_norm = ring.pointwise_norm();
        out.files.push((
            "curvature_nodes.csv".into(),
            field_csv(&[("mean_curvature", &geo.mean_curvature), ("h_f", &shape.h_f), ("trace_free_norm", &ring_norm)])?,
        ));
    }
    Ok(out)
}

const KERNEL_DIRECTIONS: usize = 5;
const EIGEN_TOLERANCE: f64 = 0.02;
/// Lower bound on `|⟨L u, u⟩| / ⟨u, u⟩` for non-kernel modes.
const NON_KERNEL_FLOOR: f64 = 0.1;

pub fn kernel(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let integrand = cfg.integrand()?;
    let mut r = rng(seed, 1);
    let dirs: Vec<Vec3> = (0..KERNEL_DIRECTIONS).map(|_| random_unit(&mut r)).collect();
    let levels: Vec<usize> = if cfg.mesh.level > mesh::MIN_LEVEL { vec![cfg.mesh.level - 1, cfg.mesh.level] } else { vec![cfg.mesh.level] };
    let mut table = Table::new("kernel", &["mode", "direction", "level", "value", "expected"]);
    let mut ratios = vec![Vec::new(); dirs.len()];
    let mut meshes = Vec::new();
    for &level in &levels {
        let w = integrand.build_wulff(level)?;
        let op = DiffOperator::new(&w.domain())?;
        for (k, c) in dirs.iter().enumerate() {
            let v = stability::kernel_ratio(&w, &op, *c)?;
            table.push(vec!["translation".into(), vec_text(c).into(), level.into(), v.into(), 0.0.into()]);
            ratios[k].push(v);
        }
        meshes.push((w, op));
    }
    let mut out = Outcome::default();
    let subject = integrand.hash();
    let finest: Vec<f64> = ratios.iter().map(|r| *r.last().expect("one level")).collect();
    out.checks.push(Check::at_most("kernel_ratio", subject.as_str(), finest.iter().copied().fold(0.0, f64::max), cfg.tolerances.kernel_ratio));
    if levels.len() == 2 {
        let decreasing = ratios.iter().all(|r| r[1] < r[0]);
        let worst = ratios.iter().map(|r| r[1] / r[0]).fold(0.0, f64::max);
        out.checks.push(Check::flag("kernel_ratio_decreasing", subject.as_str(), worst, decreasing, "fine/coarse < 1"));
    }
    let (w, op) = meshes.last().expect("one level");
    for m in -2..=2 {
        let q = stability::rayleigh_quotient(w, op, 2, m)?;
        let expected = if integrand.is_isotropic() { -4.0 } else { f64::NAN };
        table.push(vec![format!("Y2{m}").into(), "-".into(), w.level.into(), q.into(), expected.into()]);
        if integrand.is_isotropic() {
            out.checks.push(Check::within("y2_eigenvalue", format!("Y2{m}"), q, -4.0, 4.0 * EIGEN_TOLERANCE));
        } else {
            out.checks.push(Check::at_least("non_kernel_rayleigh", format!("Y2{m}"), q.abs(), NON_KERNEL_FLOOR));
        }
    }
    out.tables.push(table);
    Ok(out)
}

const CENTER_OFFSET_TOLERANCE: f64 = 1e-4;
const CENTER_ITERATIONS: usize = 10;
const CENTER_EXPONENT: (f64, f64) = (2.0, 0.2);

fn zero_model(integrand: &Integrand) -> (SurfaceModel, Parametrization) {
    if integrand.is_isotropic() {
        (SurfaceModel::Exp { radius: SpectralField::zeros(0) }, Parametrization::Exp)
    } else {
        (SurfaceModel::Radial { integrand: integrand.clone(), radius: SpectralField::zeros(0) }, Parametrization::Radial)
    }
}

pub fn center(cfg: &ExperimentConfig) -> Result<Outcome> {
    let integrand = cfg.integrand()?;
    let w = integrand.build_wulff(cfg.mesh.level)?;
    let options = cfg.centering();
    let (zero, parametrization) = zero_model(&integrand);
    let base = base_for(&w, parametrization);
    let t = cfg.center.translation;
    let shifted = SurfaceModel::Translated { inner: Box::new(zero), shift: t };
    let res = stability::center(&shifted, base, &options)?;

    let mut out = Outcome::default();
    let mut trace = Table::new("center_trace", &["case", "epsilon", "evaluation", "residual"]);
    for (k, r) in res.residuals.iter().enumerate() {
        trace.push(vec!["translation".into(), 0.0.into(), (k + 1).into(), (*r).into()]);
    }
    let offset = geom::norm(geom::sub(res.c, t));
    let mut summary = Table::new("center", &["case", "epsilon", "c_x", "c_y", "c_z", "offset_error", "iterations", "one_step_residual", "eta_margin"]);
    summary.push(vec![
        "translation".into(),
        0.0.into(),
        res.c[0].into(),
        res.c[1].into(),
        res.c[2].into(),
        offset.into(),
        res.iterations.into(),
        res.residuals.get(1).copied().into(),
        res.margin.into(),
    ]);
    out.checks.push(Check::at_most("translation_recovered", vec_text(&t), offset, CENTER_OFFSET_TOLERANCE));
    out.checks.push(Check::at_most("translation_iterations", vec_text(&t), res.iterations as f64, CENTER_ITERATIONS as f64));

    let field = SpectralField::linear(cfg.center.direction).add(&SpectralField::harmonic(cfg.center.l, cfg.center.m, 1.0));
    let label = format!("phi{}+Y{}{}", vec_text(&cfg.center.direction), cfg.center.l, cfg.center.m);
    let mut eps_used = Vec::new();
    let mut one_step = Vec::new();
    for &eps in &cfg.center.amplitudes {
        let family = PerturbationFamily::Custom { field: field.clone() };
        let model = stability::perturbed_model(&integrand, &family, parametrization, eps)?;
        let res = stability::center(&model, base, &options)?;
        for (k, r) in res.residuals.iter().enumerate() {
            trace.push(vec![label.as_str().into(), eps.into(), (k + 1).into(), (*r).into()]);
        }
        let step = res.residuals.get(1).copied();
        summary.push(vec![
            label.as_str().into(),
            eps.into(),
            res.c[0].into(),
            res.c[1].into(),
            res.c[2].into(),
            f64::NAN.into(),
            res.iterations.into(),
            step.into(),
            res.margin.into(),
        ]);
        if let Some(s) = step.filter(|s| *s > 0.0) {
            eps_used.push(eps);
            one_step.push(s);
        }
    }
    let exponent = if eps_used.len() >= 2 { loglog_slope(&eps_used, &one_step) } else { f64::NAN };
    out.checks.push(Check::within("one_step_exponent", label.as_str(), exponent, CENTER_EXPONENT.0, CENTER_EXPONENT.1));
    out.tables.push(summary);
    out.tables.push(trace);
    Ok(out)
}

const SLOPE_TOLERANCE: f64 = 0.10;
const KERNEL_SLOPE_TOLERANCE: f64 = 0.15;
const RATIO_DRIFT: f64 = 2.0;
const KERNEL_DISTANCE: f64 = 1e-6;

/// Acceptance checks of a finished sweep.
pub(crate) fn sweep_checks(res: &SweepResult) -> Vec<Check> {
    let label = res.family.label();
    let mut checks = Vec::new();
    checks.push(Check::flag(
        "sweep_complete",
        label.as_str(),
        res.rows.len() as f64,
        res.truncated.is_none(),
        "no certificate failure",
    ));
    if res.family.is_kernel() {
        checks.push(Check::within("deficit_slope", label.as_str(), res.deficit_fit.slope, 2.0, KERNEL_SLOPE_TOLERANCE));
        let worst = res.rows.iter().map(|r| r.distance).fold(0.0, f64::max);
        checks.push(Check::at_most("post_centering_distance", label.as_str(), worst, KERNEL_DISTANCE));
    } else {
        let slope = res.distance_fit.as_ref().map_or(f64::NAN, |f| f.slope);
        checks.push(Check::within("distance_slope", label.as_str(), slope, 1.0, SLOPE_TOLERANCE));
        let ratios: Vec<f64> = res.rows.iter().filter_map(|r| r.ratio).collect();
        let drift = if ratios.len() == res.rows.len() && !ratios.is_empty() {
            ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            f64::INFINITY
        };
        checks.push(Check::at_most("ratio_drift", label.as_str(), drift, RATIO_DRIFT));
    }
    checks
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let integrand = cfg.integrand()?;
    let family = cfg.family()?;
    let parametrization = cfg.parametrization(&integrand, &family)?;
    let w = integrand.build_wulff(cfg.mesh.level)?;
    let p = cfg.perturbation.p;
    let res = stability::scaling_sweep(&w, &family, parametrization, &cfg.perturbation.amplitudes, p, &cfg.centering())?;
    let label = family.label();
    let mut out = Outcome { checks: sweep_checks(&res), ..Outcome::default() };
    let mut table = Table::new(
        "sweep",
        &["family", "epsilon", "p", "deficit", "distance", "ratio", "slope_flags", "eta_margin", "iterations"],
    );
    for r in &res.rows {
        table.push(vec![
            label.as_str().into(),
            r.epsilon.into(),
            p.into(),
            r.deficit.into(),
            r.distance.into(),
            r.ratio.into(),
            "-".into(),
            r.margin.into(),
            r.iterations.into(),
        ]);
    }
    let distance_slope = res.distance_fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let flags = format!(
        "deficit_slope={:.4};distance_slope={:.4};{}",
        res.deficit_fit.slope,
        distance_slope,
        if out.pass() { "pass" } else { "fail" }
    );
    table.push(vec![
        label.as_str().into(),
        "slope".into(),
        p.into(),
        res.deficit_fit.slope.into(),
        distance_slope.into(),
        Cell::Text("-".into()),
        flags.into(),
        res.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min).into(),
        res.rows.iter().map(|r| r.iterations).max().unwrap_or(0).into(),
    ]);
    out.tables.push(table);
    let mut raw = Table::new("sweep_raw", &["family", "epsilon", "raw_distance", "distance"]);
    for r in &res.rows {
        raw.push(vec![label.as_str().into(), r.epsilon.into(), r.raw_distance.into(), r.distance.into()]);
    }
    out.tables.push(raw);
    let mut deficits = Table::new("sweep_oscillation", &DEFICIT_COLUMNS);
    let reports: Vec<(f64, DeficitReport)> = res.rows.iter().map(|r| (r.epsilon, r.report.clone())).collect();
    for (eps, d) in &reports {
        deficits.push(deficit_row(&label, *eps, d));
    }
    if !family.is_kernel() {
        out.checks.extend(oscillation_checks(&reports, &label));
    }
    out.tables.push(deficits);
    out.plots.push(("sweep_raw".into(), "epsilon".into(), vec!["raw_distance".into(), "distance".into()]));
    if let Some(msg) = &res.truncated {
        out.files.push(("sweep_truncated.txt".into(), format!("{msg}\n")));
    }
    Ok(out)
}

const SPECTRUM_TRIALS: usize = 100;
const SPECTRUM_TOLERANCE: f64 = 1e-12;
const ORACLE_TOLERANCE: f64 = 1e-10;
const TAYLOR_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
fn random_rotation(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// `½ ‖Riem − κ (δδ − δδ)‖²` from the explicit 4-index tensor of `h`.
pub(crate) fn p_oracle(h: &DMatrix<f64>, kappa: f64) -> f64 {
    let n = h.nrows();
    let riem = curvature::riemann_bruteforce(h);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = riem[((i * n + j) * n + k) * n + l] - kappa * (d(i, k) * d(j, l) - d(i, l) * d(j, k));
                    s += v * v;
                }
            }
        }
    }
    0.5 * s
}

/// Largest deviations over random spectra: Ricci eigenvalues against the
/// dense route, `p` against the tensor oracle, and the two scalar-curvature formulas.
pub(crate) fn spectrum_errors(n: usize, seed: u64, trials: usize) -> Result<(f64, f64, f64)> {
    let mut r = rng(seed, 100 + n as u64);
    let (mut ricci, mut oracle, mut trace) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let lambda: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let kappa: f64 = r.gen_range(-1.0..1.0);
        let spec = EigenSpectrum::new(lambda, kappa)?;
        let q = random_rotation(&mut r, n);
        let h = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spec.lambda())) * q.transpose();
        let h = (&h + h.transpose()) * 0.5;
        let (ric, scalar) = curvature::gauss_ricci(&h);
        let mut dense: Vec<f64> = SymmetricEigen::new(ric).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let mut direct = einstein::ricci_spectrum(&spec);
        direct.sort_by(f64::total_cmp);
        let scale = 1.0 + direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ricci = ricci.max(dense.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
        let (p, _) = einstein::polys(&spec);
        oracle = oracle.max((p_oracle(&h, kappa) - p).abs() / (1.0 + p.abs()));
        let sum: f64 = spec.lambda().iter().sum();
        let sq: f64 = spec.lambda().iter().map(|l| l * l).sum();
        let from_ricci: f64 = direct.iter().sum();
        trace = trace.max(((sum * sum - sq) - from_ricci).abs().max((scalar - from_ricci).abs()) / scale);
    }
    Ok((ricci, oracle, trace))
}

pub fn einstein(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let e = &cfg.einstein;
    let mut out = Outcome::default();

    let mut spectra = Table::new("einstein_spectra", &["n", "trials", "max_ricci_error", "max_p_oracle_error", "max_trace_error"]);
    for &n in &e.dimensions {
        let (ricci, oracle, trace) = spectrum_errors(n, seed, SPECTRUM_TRIALS)?;
        spectra.push(vec![n.into(), SPECTRUM_TRIALS.into(), ricci.into(), oracle.into(), trace.into()]);
        out.checks.push(Check::at_most("ricci_spectrum", format!("n={n}"), ricci, SPECTRUM_TOLERANCE));
        out.checks.push(Check::at_most("p_tensor_oracle", format!("n={n}"), oracle, ORACLE_TOLERANCE));
        out.checks.push(Check::at_most("trace_consistency", format!("n={n}"), trace, SPECTRUM_TOLERANCE));
    }
    out.tables.push(spectra);

    let mut zeros = Table::new(
        "einstein_zero_sets",
        &["n", "kappa", "analytic_residual", "mismatches", "zeros_found", "min_off_zero", "starts", "pass"],
    );
    let mut ratios = Table::new("einstein_ratio", &["n", "kappa", "c1_est", "c2_est", "samples", "extremizer"]);
    for &n in &e.dimensions {
        for &kappa in &e.kappas {
            let z = einstein::verify_zero_sets(n, kappa, e.zero_starts, seed)?;
            zeros.push(vec![
                n.into(),
                kappa.into(),
                z.analytic_residual.into(),
                z.mismatches.into(),
                z.zeros_found.into(),
                z.min_off_zero.into(),
                z.starts.into(),
                z.pass.into(),
            ]);
            out.checks.push(Check::flag("zero_sets_match", format!("n={n} kappa={kappa}"), z.mismatches as f64, z.pass, "no mismatched zeros"));
            let b = einstein::ratio_bounds_with(n, kappa, e.samples, seed, e.kappa_bound)?;
            ratios.push(vec![
                n.into(),
                kappa.into(),
                b.c1.into(),
                b.c2.into(),
                b.samples.into(),
                format!("argmin={};argmax={}", vec_text(&b.argmin), vec_text(&b.argmax)).into(),
            ]);
        }
    }
    out.tables.push(zeros);
    out.tables.push(ratios);

    let mut pinching = Table::new("einstein_pinching", &["n", "samples", "violations", "sharp_violations"]);
    for &n in &e.dimensions {
        let s = einstein::pinching_sweep(n, e.samples, seed)?;
        pinching.push(vec![n.into(), s.samples.into(), s.violations.into(), s.sharp_violations.into()]);
        out.checks.push(Check::at_most("pinching_violations", format!("n={n}"), s.violations as f64, 0.0));
        out.checks.push(Check::at_most("sharp_pinching_violations", format!("n={n}"), s.sharp_violations as f64, 0.0));
    }
    out.tables.push(pinching);

    let mut taylor = Table::new("einstein_taylor", &["n", "t", "p", "q", "ratio"]);
    for &n in &e.dimensions {
        for &t in &TAYLOR_STEPS {
            let mut lambda = vec![0.0; n];
            lambda[0] = 1.0;
            lambda[1] = t;
            let (p, q) = einstein::polys(&EigenSpectrum::new(lambda, 0.0)?);
            taylor.push(vec![n.into(), t.into(), p.into(), q.into(), (p / q).into()]);
        }
    }
    out.tables.push(taylor);

    let mut alpha = Table::new("einstein_alpha", &["n", "p", "q", "alpha"]);
    let n0 = e.dimensions.iter().copied().min().unwrap_or(3);
    for (p, q, expected) in [(10.0, 4.0, Some(1.0)), (10.0, 8.0, Some(0.25)), (10.0, 5.0, Some(1.0)), (e.p, e.q, None)] {
        match einstein::alpha_exponent(n0, p, q) {
            Ok(a) => {
                alpha.push(vec![n0.into(), p.into(), q.into(), a.into()]);
                if let Some(x) = expected {
                    out.checks.push(Check::flag("alpha", format!("p={p} q={q}"), a, a == x, &format!("== {x}")));
                }
            }
            Err(err) => {
                alpha.push(vec![n0.into(), p.into(), q.into(), Cell::Text("n/a".into())]);
                out.checks.push(Check::flag("alpha", format!("p={p} q={q}"), f64::NAN, false, &err.to_string()));
            }
        }
    }
    out.tables.push(alpha);
    Ok(out)
}
