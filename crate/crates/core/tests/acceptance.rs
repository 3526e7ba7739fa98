//! End-to-end acceptance criteria 1–9. Each criterion prints one PASS/FAIL
//! line. Sub-checks that are known to be unattainable are reported but do
//! not fail the test target; every other sub-check must pass. Runs without
//! the libtest harness so the lines are always shown.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use wulffstab::cli::{self, Command, ExperimentConfig, Outcome};
use wulffstab::curvature;
use wulffstab::geom;
use wulffstab::integrand::{Integrand, WulffMesh};
use wulffstab::mesh::ScalarField;
use wulffstab::surface::{self, FlatGrid};

struct Sub {
    name: String,
    pass: bool,
    detail: String,
    /// Expected to fail; see the reason string.
    unattainable: Option<&'static str>,
}

struct Criterion {
    id: usize,
    title: &'static str,
    subs: Vec<Sub>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, subs: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.subs.push(Sub { name: name.into(), pass, detail: detail.into(), unattainable: None });
    }

    fn check_unattainable(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>, reason: &'static str) {
        self.subs.push(Sub { name: name.into(), pass, detail: detail.into(), unattainable: Some(reason) });
    }

    fn absorb(&mut self, prefix: &str, out: &Outcome, unattainable: impl Fn(&cli::Check) -> Option<&'static str>) {
        for c in &out.checks {
            let name = format!("{prefix}{} [{}]", c.name, c.subject);
            let detail = format!("value {:e}, rule {}", c.value, c.rule);
            match unattainable(c) {
                Some(reason) => self.check_unattainable(name, c.pass, detail, reason),
                None => self.check(name, c.pass, detail),
            }
        }
    }

    fn timed(&mut self, name: &str, elapsed: Duration, budget: Duration) {
        self.check(name, elapsed < budget, format!("{:.2} s, budget {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64()));
    }

    /// Prints the summary line and details; returns the sub-checks that
    /// failed without being marked unattainable.
    fn report(&self) -> Vec<String> {
        let pass = self.subs.iter().all(|s| s.pass);
        println!("criterion {}: {} ({})", self.id, if pass { "PASS" } else { "FAIL" }, self.title);
        let mut unexpected = Vec::new();
        for s in &self.subs {
            let tag = match (s.pass, s.unattainable) {
                (true, _) => "ok",
                (false, Some(_)) => "FAIL (known)",
                (false, None) => "FAIL",
            };
            println!("    {tag}: {}: {}", s.name, s.detail);
            if let (false, Some(reason)) = (s.pass, s.unattainable) {
                println!("        reason: {reason}");
            }
            if !s.pass && s.unattainable.is_none() {
                unexpected.push(format!("criterion {}: {}", self.id, s.name));
            }
        }
        unexpected
    }
}

fn config(src: &str) -> ExperimentConfig {
    ExperimentConfig::parse(src).expect("valid test config")
}

const ELLIPSOID: &str = "[integrand]\nfamily = \"quadratic\"\nmatrix = [[1, 0, 0], [0, 1, 0], [0, 0, 4]]\n";
const KERNEL_FAMILY: &str = "[perturbation]\nfamily = \"kernel\"\nc = [0.6, 0.0, 0.8]\n";
const SEED: u64 = 20240517;

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "Wulff correctness");
    let start = Instant::now();
    let ell = Integrand::ellipsoidal(1.0, 1.0, 2.0).unwrap().build_wulff(5).unwrap();
    let iso = Integrand::constant().build_wulff(5).unwrap();
    let elapsed = start.elapsed();
    let ell_err = ell
        .vertices
        .iter()
        .map(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] / 4.0 - 1.0).abs())
        .fold(0.0, f64::max);
    let iso_err = iso.vertices.iter().map(|x| (geom::norm(*x) - 1.0).abs()).fold(0.0, f64::max);
    c.check("ellipsoid level set", ell_err <= 1e-10, format!("max |x^T M^-1 x - 1| = {ell_err:e}"));
    c.check("unit sphere", iso_err <= 1e-12, format!("max ||x| - 1| = {iso_err:e}"));
    c.timed("runtime", elapsed, Duration::from_secs(5));
    c
}

fn rigidity_error(w: &WulffMesh) -> f64 {
    let geo = surface::radial_graph(w, &ScalarField::nodal(vec![0.0; w.len()])).unwrap();
    let s = curvature::anisotropic_shape_operator(&geo, &w.integrand).unwrap();
    s.s_f
        .values
        .iter()
        .map(|m| geom::mat2_frobenius(&[[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]]))
        .fold(0.0, f64::max)
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "anisotropic rigidity under refinement");
    let f = Integrand::ellipsoidal(1.0, 1.0, 2.0).unwrap();
    let mut h = Vec::new();
    let mut e = Vec::new();
    for level in 3..=6 {
        let w = f.build_wulff(level).unwrap();
        h.push(w.edge_length().ln());
        e.push(rigidity_error(&w));
    }
    let le: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = h.len() as f64;
    let (mh, me) = (h.iter().sum::<f64>() / n, le.iter().sum::<f64>() / n);
    let order = h.iter().zip(&le).map(|(a, b)| (a - mh) * (b - me)).sum::<f64>()
        / h.iter().map(|a| (a - mh) * (a - mh)).sum::<f64>();
    c.check("monotone decrease", e.windows(2).all(|p| p[1] < p[0]), format!("max |S_F - Id| by level 3..6: {e:?}"));
    c.check("fitted order", order >= 1.5, format!("order {order:.3}"));
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "kernel characterization");
    let iso = cli::execute(Command::Kernel, &config(""), SEED).unwrap();
    c.absorb("S2 ", &iso, |_| None);
    let ell = cli::execute(Command::Kernel, &config(ELLIPSOID), SEED).unwrap();
    c.absorb("ellipsoid ", &ell, |_| None);
    c
}

fn sweep_unattainable(check: &cli::Check) -> Option<&'static str> {
    (check.name == "post_centering_distance").then_some(
        "after centering, the translation family keeps a second-order radius of size O(eps^2); \
         an absolute bound of 1e-6 holds only for eps below about 6e-4",
    )
}

fn criterion_4_and_6() -> (Criterion, Criterion, Outcome) {
    let mut c4 = Criterion::new(4, "stability scaling");
    let mut c6 = Criterion::new(6, "oscillation estimate");
    let start = Instant::now();
    let y20 = cli::execute(Command::Sweep, &config(""), SEED).unwrap();
    let t_y20 = start.elapsed();
    let start = Instant::now();
    let kernel = cli::execute(Command::Sweep, &config(KERNEL_FAMILY), SEED).unwrap();
    let t_kernel = start.elapsed();
    for ch in &y20.checks {
        let (target, prefix) = if ch.name == "lambda_star_vs_mean" || ch.name == "c_osc_spread" { (&mut c6, "") } else { (&mut c4, "Y20 ") };
        target.check(format!("{prefix}{} [{}]", ch.name, ch.subject), ch.pass, format!("value {:e}, rule {}", ch.value, ch.rule));
    }
    c4.absorb("kernel ", &kernel, sweep_unattainable);
    c4.timed("Y20 sweep runtime", t_y20, Duration::from_secs(60));
    c4.timed("kernel sweep runtime", t_kernel, Duration::from_secs(60));
    (c4, c6, y20)
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "centering");
    let cfg = config("[center]\ntranslation = [0.03, 0.0, 0.04]\namplitudes = [0.01, 0.02, 0.04]\n");
    assert!((geom::norm(cfg.center.translation) - 0.05).abs() < 1e-15);
    let out = cli::execute(Command::Center, &cfg, SEED).unwrap();
    c.absorb("", &out, |_| None);
    c
}

fn einstein_unattainable(check: &cli::Check) -> Option<&'static str> {
    match check.name.as_str() {
        "pinching_violations" if check.subject == "n=3" => Some(
            "with n = 3 the Ricci differences carry a single remaining eigenvalue, so the sharp constant \
             is (n-2)^2 = 1 < n-1; e.g. lambda = (1,1,2), Lambda = 1 gives 2/3 < 4/3",
        ),
        "zero_sets_match" if check.subject.contains("kappa=-1") && !check.subject.starts_with("n=3") => Some(
            "for kappa < 0 and n >= 4, q vanishes at traceless spectra with lambda_i^2 = (n-1)|kappa| \
             (e.g. sqrt(3)(1,-1,1,-1) for n = 4) while p does not",
        ),
        _ => None,
    }
}

fn criterion_7() -> (Criterion, Outcome) {
    let mut c = Criterion::new(7, "Einstein algebra");
    let start = Instant::now();
    let out = cli::execute(Command::Einstein, &config(""), SEED).unwrap();
    let elapsed = start.elapsed();
    c.absorb("", &out, einstein_unattainable);
    c.timed("runtime", elapsed, Duration::from_secs(30));
    (c, out)
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "flat-graph model case");
    let lambda = 0.5;
    let grid = FlatGrid::from_fn(201, 0.9, |x, y| surface::spherical_cap(lambda, x, y)).unwrap();
    let shape = surface::flat_graph_shape(&grid);
    let err = shape
        .field
        .values
        .iter()
        .map(|m| geom::mat2_frobenius(&[[m[0][0] - lambda, m[0][1]], [m[1][0], m[1][1] - lambda]]))
        .fold(0.0, f64::max);
    c.check("h(u) against 0.5 Id", err <= 1e-4, format!("max |h - 0.5 Id| = {err:e} over {} nodes", shape.points.len()));
    let (residual, fitted) = surface::cap_fit_residual(&grid, 4.0).unwrap();
    c.check("cap fit residual", residual <= 1e-8, format!("residual {residual:e} at lambda {fitted:.12}"));
    c
}

fn csv_bytes(out: &Outcome, command: Command, dir: &Path) -> BTreeMap<String, Vec<u8>> {
    out.write(command, dir, false).unwrap();
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn criterion_9(first: &[(Command, &str, &Outcome)]) -> Criterion {
    let mut c = Criterion::new(9, "determinism");
    let tmp = tempfile::tempdir().unwrap();
    for (k, (command, src, out)) in first.iter().enumerate() {
        let again = cli::execute(*command, &config(src), SEED).unwrap();
        let a = csv_bytes(out, *command, &tmp.path().join(format!("a{k}")));
        let b = csv_bytes(&again, *command, &tmp.path().join(format!("b{k}")));
        let same = !a.is_empty() && a == b;
        c.check(format!("{} rerun", command.name()), same, format!("{} CSV files compared byte for byte", a.len()));
    }
    c
}

fn main() -> std::process::ExitCode {
    let c1 = criterion_1();
    let c2 = criterion_2();
    let c3 = criterion_3();
    let (c4, c6, y20) = criterion_4_and_6();
    let c5 = criterion_5();
    let (c7, einstein) = criterion_7();
    let c8 = criterion_8();
    let wulff = cli::execute(Command::Wulff, &config(ELLIPSOID), SEED).unwrap();
    let c9 = criterion_9(&[(Command::Sweep, "", &y20), (Command::Einstein, "", &einstein), (Command::Wulff, ELLIPSOID, &wulff)]);
    let mut unexpected = Vec::new();
    for c in [&c1, &c2, &c3, &c4, &c5, &c6, &c7, &c8, &c9] {
        unexpected.extend(c.report());
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures: {unexpected:#?}");
        std::process::ExitCode::FAILURE
    }
}
