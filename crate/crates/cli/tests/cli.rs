use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quatma::grid::read_field;

fn qma(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qma"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("failed to run qma")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qma-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn identities_pass_and_corruption_fails() {
    let out = scratch("identities");
    let ok = qma(&["identities", "--n", "1", "--trials", "5"], &out);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json(out.join("identities.json"))["passed"], true);
    let bad = qma(&["identities", "--n", "1", "--trials", "5", "--corrupt"], &out);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn extremal_writes_field_and_summary() {
    let out = scratch("extremal");
    let r = qma(&["extremal", "--grid", "9"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let u = read_field(&out.join("extremal.bin")).unwrap();
    assert!(u.min_value() >= -1.0 && u.max_value() <= 0.0);
    let s = json(out.join("extremal_summary.json"));
    assert!(s["closed_form_sup_error"].as_f64().unwrap() < 5e-2);
    assert!(out.join("extremal_slice.csv").exists());
}

#[test]
fn manufactured_solve_and_report() {
    let out = scratch("solve");
    for method in ["variational", "direct-n1"] {
        let r = qma(&["solve", "--grid", "9", "--method", method], &out);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        let s = json(out.join("solve_summary.json"));
        assert!(s["sup_error"].as_f64().unwrap() < 2e-2);
        assert_eq!(s["psh"]["is_psh"], true);
    }
    let r = qma(&["report"], &out);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS solve_summary.json"));
}

#[test]
fn zero_measure_from_config_gives_zero_field() {
    let out = scratch("zero");
    let cfg = out.join("zero.toml");
    std::fs::write(&cfg, "n = 1\ngrid = 9\n\n[solve]\nmu = { type = \"constant\", value = 0.0 }\n").unwrap();
    let r = qma(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_field(&out.join("solution.bin")).unwrap().sup_norm(), 0.0);
}

#[test]
fn verify_is_reproducible() {
    let a = scratch("verify-a");
    let b = scratch("verify-b");
    for out in [&a, &b] {
        let r = qma(&["verify", "--grid", "9", "--trials", "2", "--seed", "5"], out);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
    }
    let csv_a = std::fs::read(a.join("verify.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("verify.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("verify_summary.json")).unwrap(), std::fs::read(b.join("verify_summary.json")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("seed,trial,check,lhs,rhs,margin,tol,pass\n"));
    assert!(text.lines().count() > 2);
}

#[test]
fn energy_with_derivative_suite() {
    let out = scratch("energy");
    let r = qma(&["energy", "--grid", "9", "--trials", "2", "--derivative-step", "1e-3"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let s = json(out.join("energy_summary.json"));
    assert!(s["energies"]["1"].as_f64().unwrap() > 0.0);
    assert!(out.join("derivative.csv").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let out = scratch("errors");
    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "sed = 3\n").unwrap();
    assert_eq!(qma(&["verify", "--config", cfg.to_str().unwrap()], &out).status.code(), Some(2));
    assert_eq!(qma(&["solve", "--n", "2", "--grid", "5", "--method", "direct-n1"], &out).status.code(), Some(2));
    let r = Command::new(env!("CARGO_BIN_EXE_qma"))
        .args(["report", "--out"])
        .arg(&out)
        .env("QMA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}
