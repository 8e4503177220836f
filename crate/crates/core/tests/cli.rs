//! End-to-end runs of the `phasemeter` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phasemeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasemeter")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_then_compare_reports_equal() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = phasemeter(&["simulate-joint", "--set", "state=fock:1", "--out", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["rho.csv", "q.csv", "report.json", "metadata.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let report = read_json(&run.join("report.json"));
    assert_eq!(report["schema"], "phasemeter/1");
    assert_eq!(report["config"]["state"], "fock:1");
    for regime in ["retrodictive", "predictive"] {
        let product = report["result"][regime]["product"].as_f64().unwrap();
        assert!((product - 0.5).abs() < 1e-4, "{regime}: {product}");
    }

    let cmp = dir.path().join("cmp");
    let rho = run.join("rho.csv");
    let q = run.join("q.csv");
    let out = phasemeter(&["compare", rho.to_str().unwrap(), q.to_str().unwrap(), "--out", cmp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdict = read_json(&cmp.join("compare.json"));
    assert_eq!(verdict["result"]["report"]["verdict"], "equal");
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "# random state, fixed seed\nstate = random:3\nmaxOrder = 4\n").unwrap();
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = phasemeter(&[
            "oracle",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(out_dir.join("oracle.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let v: Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config"]["state"], "random:3");
}

#[test]
fn negative_pointer_width_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasemeter(&[
        "simulate-joint",
        "--set",
        "pointerWidth1=-1",
        "--set",
        "pointerWidth2=0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pointerWidth1"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn exit_codes_follow_the_error_family() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(phasemeter(&["husimi", "--set", "colour=blue", "--out", d]).status.code(), Some(1));
    assert_eq!(phasemeter(&["husimi", "--profile", "coarse", "--out", d]).status.code(), Some(1));
    assert_eq!(phasemeter(&["husimi", "--no-such-flag"]).status.code(), Some(1));
    let missing = dir.path().join("missing.csv");
    let m = missing.to_str().unwrap();
    assert_eq!(phasemeter(&["compare", m, m, "--out", d]).status.code(), Some(3));
    // number states this high escape the default joint grid
    assert_eq!(phasemeter(&["error-report", "--set", "errorDim=30", "--out", d]).status.code(), Some(2));
}

#[test]
fn posterior_and_single_coordinate_runs() {
    let dir = tempfile::tempdir().unwrap();
    let post = dir.path().join("post");
    let out = phasemeter(&[
        "posterior",
        "--set",
        "state=coherent:0.5,-0.5",
        "--set",
        "region=0,1,-1,0",
        "--out",
        post.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&post.join("posterior.json"));
    let p = v["result"]["p_region"].as_f64().unwrap();
    assert!(p > 0.0 && p < 1.0);
    assert!(v["result"]["trace_distance_to_mixture"].as_f64().unwrap() < 1e-6);

    let line = dir.path().join("line");
    let out = phasemeter(&["simulate-1d", "--set", "kernel=gaussian:0.2,0.1", "--out", line.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&line.join("kernel.json"));
    let e = v["result"]["retro_error"].as_f64().unwrap();
    assert!((e - (0.05f64).sqrt()).abs() < 1e-6);
    let csv = std::fs::read_to_string(line.join("outcome.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "mu,density"));
}
