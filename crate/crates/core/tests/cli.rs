use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wulffstab"))
}

fn files(dir: &Path) -> Vec<String> {
    match std::fs::read_dir(dir) {
        Ok(rd) => {
            let mut v: Vec<String> = rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
            v.sort();
            v
        }
        Err(_) => Vec::new(),
    }
}

#[test]
fn invalid_config_exits_2_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\n[mesh]\nlevel = 40\n").unwrap();
    let out = tmp.path().join("out");
    let o = bin().args(["wulff", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:3:"), "{err}");
    assert!(files(&out).is_empty());
}

#[test]
fn unknown_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[mesh]\nlevel = 3\nrefine = true\n").unwrap();
    let o = bin().args(["wulff", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));
}

#[test]
fn passing_run_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("ok.toml");
    std::fs::write(&cfg, "[mesh]\nlevel = 3\n").unwrap();
    let out = tmp.path().join("out");
    let o = bin().args(["wulff", "--svg", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let names = files(&out);
    for want in ["wulff_checks.csv", "wulff_checks.dat", "wulff.csv", "wulff.mesh"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
    assert!(!names.iter().any(|n| n.ends_with(".tmp")));
    let checks = std::fs::read_to_string(out.join("wulff_checks.csv")).unwrap();
    assert!(checks.starts_with("check,subject,value,rule,pass"));
}

#[test]
fn failed_check_exits_1_and_keeps_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("strict.toml");
    std::fs::write(&cfg, "[integrand]\nfamily = \"ellipsoid\"\naxes = [1.0, 1.0, 2.0]\n[mesh]\nlevel = 3\n[tolerances]\ngauge = 1e-300\n").unwrap();
    let out = tmp.path().join("out");
    let o = bin().args(["wulff", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wulff_checks.csv"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let checks = std::fs::read_to_string(out.join("wulff_checks.csv")).unwrap();
    assert!(checks.contains("fail"));
}

#[test]
fn computational_error_exits_1_without_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("few.toml");
    std::fs::write(&cfg, "[mesh]\nlevel = 3\n[perturbation]\namplitudes = [0.001, 0.002, 0.003]\n").unwrap();
    let out = tmp.path().join("out");
    let o = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 5 amplitudes"));
    assert!(files(&out).is_empty());
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[mesh]\nlevel = 3\n[integrand]\nfamily = \"ellipsoid\"\naxes = [1.0, 1.2, 1.5]\n").unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("out{threads}"));
        let o = bin().env("WULFFSTAB_THREADS", threads).args(["sweep", "--seed", "5", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
        outputs.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = bin().env("WULFFSTAB_THREADS", "zero").arg("wulff").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
