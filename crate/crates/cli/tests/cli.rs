use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn hkflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkflow")).args(args).output().expect("binary runs")
}

fn write_variant(dir: &Path, name: &str, from: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(scenarios().join(from)).unwrap();
    for (old, new) in edits {
        assert!(text.contains(old), "{old}");
        text = text.replace(old, new);
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_record(out: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).expect("stderr holds a JSON record")
}

#[test]
fn qubit_scenario_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("qubit_sigma_x.json");
    let out = hkflow(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("qubit_sigma_x.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + 2 * 2 + 2 * 2 + 2);
    let norm_col = header.iter().position(|h| *h == "norm_defect").unwrap();
    let rho1: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rho1.len(), 1001);
    // rho_1 = 0.5 + 0.4 cos(2 tau) falls from 0.9 over tau in [0, 1]
    assert!(rho1[0] > 0.89 && rho1[1000] < 0.7);
    for line in lines {
        let defect: f64 = line.split(',').nth(norm_col).unwrap().parse().unwrap();
        assert!(defect <= 1e-10);
    }

    let report = read_json(&dir.path().join("qubit_sigma_x.report.json"));
    assert_eq!(report["all_pass"], Value::Bool(true));
    assert_eq!(report["tool"], "hkflow");
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    for check in report["checks"].as_array().unwrap() {
        for key in ["name", "residual", "tolerance", "pass"] {
            assert!(check.get(key).is_some(), "{key} missing in {check}");
        }
    }
    assert_eq!(report["checks"].as_array().unwrap().len(), 13);
    assert!(report["convergence"]["rows"].as_array().unwrap().len() == 4);
}

#[test]
fn nonlinear_control_reports_metric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("nonlinear_control.json");
    let out = hkflow(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("nonlinear_control.report.json"));
    assert_eq!(report["classification"]["preserves_metric"]["holds"], Value::Bool(false));
    assert_eq!(report["classification"]["preserves_symplectic"]["holds"], Value::Bool(true));

    // the same scenario expecting the metric to be preserved fails with status 1
    let strict = write_variant(dir.path(), "strict.json", "nonlinear_control.json", &[(
        r#"{ "name": "killing", "expect": false }"#,
        r#""killing""#,
    )]);
    let out = hkflow(&["run", strict.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_variant(dir.path(), "zero.json", "qubit_sigma_x.json", &[(r#""steps": 1000"#, r#""steps": 0"#)]);
    let out = hkflow(&["validate", zero.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let record = stderr_record(&out);
    assert_eq!(record["error"], "config");
    assert!(record["messages"][0].as_str().unwrap().contains("steps"));

    let skew = write_variant(dir.path(), "skew.json", "qubit_sigma_x.json", &[(
        r#""re": [[0.0, 1.0], [1.0, 0.0]]"#,
        r#""re": [[0.0, 1.0], [-1.0, 0.0]]"#,
    )]);
    let out = hkflow(&["run", skew.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["messages"][0].as_str().unwrap().contains("kernel not Hermitian"));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "not json at all").unwrap();
    let out = hkflow(&["validate", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let missing = hkflow(&["validate", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(4));
    assert_eq!(stderr_record(&missing)["error"], "io");
}

#[test]
fn boundary_start_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let edge = write_variant(dir.path(), "edge.json", "nonlinear_control.json", &[(
        r#""rho": [0.5, 0.3, 0.2]"#,
        r#""rho": [0.5, 0.5, 0.0]"#,
    )]);
    let out = hkflow(&["run", edge.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_record(&out)["error"], "numeric");
}

#[test]
fn seed_override_changes_hash_not_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("qubit_sigma_x.json");
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = hkflow(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", seed, "--quiet"]);
        assert_eq!(out.status.code(), Some(0));
        (fs::read(out_dir.join("qubit_sigma_x.csv")).unwrap(), read_json(&out_dir.join("qubit_sigma_x.report.json")))
    };
    let (csv_a, rep_a) = run("1", "a");
    let (csv_b, rep_b) = run("2", "b");
    let (_, rep_c) = run("1", "c");
    assert_eq!(csv_a, csv_b);
    assert_ne!(rep_a["config_sha256"], rep_b["config_sha256"]);
    assert_eq!(rep_a, rep_c);
    assert_eq!(rep_b["seed"], 2);
}

#[test]
fn batch_isolates_outputs_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = hkflow(&["batch", scenarios().to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for stem in ["qubit_sigma_x", "nonlinear_control", "qutrit_linear"] {
        let sub = out_dir.join(stem);
        let files: Vec<_> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(files.len(), 2, "{stem}: {files:?}");
    }
}

#[test]
fn validate_accepts_every_shipped_scenario() {
    for entry in fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        let out = hkflow(&["validate", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
    }
}
