use std::path::Path;
use std::process::{Command, Output};

use fdlm_core::report::RESULTS_HEADER;

fn fdlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdlm")).args(args).output().expect("spawn fdlm")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn rows(dir: &Path) -> Vec<String> {
    let s = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    s.lines().map(String::from).collect()
}

#[test]
fn converge_writes_four_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    let o = fdlm(&[
        "converge", "--levels", "4", "--element", "p1bubble-p0", "--coupling", "l2", "--assembly", "exact", "--precond",
        "tri", "--inner", "dd", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(tmp.path());
    assert_eq!(r[0], RESULTS_HEADER);
    assert_eq!(r.len(), 5);
    for (i, row) in r[1..].iter().enumerate() {
        assert!(row.starts_with(&format!("{i},")));
        assert_eq!(row.split(',').count(), 11);
    }
    let eoc = std::fs::read_to_string(tmp.path().join("eoc.csv")).unwrap();
    assert_eq!(eoc.lines().count(), 5);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["levels"].as_array().unwrap().len(), 4);
    assert_eq!(summary["config"]["refinement"]["mode"], "uniform");
    assert!(summary["levels"][3]["report"]["converged"].as_bool().unwrap());
    for level in 0..4 {
        assert!(tmp.path().join(format!("background_{level}.vtk")).exists());
        assert!(tmp.path().join(format!("immersed_{level}.vtk")).exists());
    }
}

#[test]
fn incompatible_element_and_coupling_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fdlm(&["solve", "--element", "p1bubble-p0", "--coupling", "h1", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert!(!tmp.path().join("results.csv").exists());
}

#[test]
fn invalid_flags_are_usage_errors() {
    for args in [
        &["converge", "--assembly", "inexact:0"][..],
        &["converge", "--precond", "jacobi"],
        &["converge", "--inner", "mm"],
        &["adapt", "--inner", "md"],
        &["adapt", "--alpha1", "1.5"],
        &["solve", "--levels", "3"],
    ] {
        let o = fdlm(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn serial_results_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = fdlm(&["converge", "--levels", "3", "--serial", "--no-vtk", "--out", &out_arg(d.path())]);
        assert!(o.status.success());
    }
    let ra = std::fs::read(a.path().join("results.csv")).unwrap();
    let rb = std::fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(ra, rb);
    assert!(String::from_utf8(ra).unwrap().lines().skip(1).all(|l| l.ends_with(",0e0")));
}

#[test]
fn adapt_stops_at_tolerance_or_loop_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fdlm(&["adapt", "--alpha1", "0.6", "--tol", "1e-2", "--max-loops", "4", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(tmp.path());
    let n = r.len() - 1;
    assert!((1..=4).contains(&n));
    let last: Vec<f64> = r[n].split(',').map(|v| v.parse().unwrap()).collect();
    assert!(n == 4 || last[7] + last[8] <= 1e-2);
    let mut prev = 0.0;
    for row in &r[1..] {
        let ndof: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(ndof > prev);
        prev = ndof;
    }
    assert!(tmp.path().join(format!("immersed_{}.vtk", n - 1)).exists());
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# two levels, no vtk\nlevels = 2\nno_vtk = true\nelement = p1p1p1\n").unwrap();
    let out = tmp.path().join("a");
    let o = fdlm(&["converge", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&out).len(), 3);
    assert!(!out.join("background_0.vtk").exists());
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("P1P1P1"));

    let out = tmp.path().join("b");
    let o = fdlm(&["converge", "--config", cfg.to_str().unwrap(), "--levels", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(rows(&out).len(), 4);

    std::fs::write(&cfg, "alpha1 = 0.5\n").unwrap();
    let o = fdlm(&["converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_suite_passes() {
    let o = fdlm(&["check", "--levels", "2", "--element", "p1p1p1", "--coupling", "h1"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.lines().filter(|l| l.contains(": PASS")).count() >= 14);
    assert!(!stdout.contains("FAIL"));
}
