use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use layerkit::config::GRID_SCALE_VAR;
use layerkit_core::fit::loglog_slope;
use serde_json::Value;

fn layerkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layerkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove(GRID_SCALE_VAR)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "{\"params\": ");
    let out = tmp.path().join("out");
    let o = layerkit(&["euler", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_parameter_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), r#"{"params": {"eta_max": 12, "colour": "red"}}"#);
    let out = tmp.path().join("out");
    assert_eq!(layerkit(&["blasius", "--config", &cfg], &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn out_of_range_parameter_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), r#"{"params": {"n": 3}}"#);
    let out = tmp.path().join("out");
    assert_eq!(layerkit(&["residual-sweep", "--config", &cfg], &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn numerical_failure_exits_3_with_partial_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), r#"{"params": {"amplitude": 0.9995}}"#);
    let out = tmp.path().join("out");
    assert_eq!(layerkit(&["euler", "--config", &cfg], &out).status.code(), Some(3));
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["failure.json", "manifest.json"]);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "numerical-failure");
    assert_eq!(json(&out.join("failure.json"))["stage"], "euler");
}

#[test]
fn manifest_lists_every_file_and_resolved_params() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(layerkit(&["blasius", "--seed", "7"], &out).status.success());
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["params"]["eta_max"], 12.0);
    for f in manifest["files"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).is_file(), "{f} listed but missing");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(layerkit(&["degree"], &a).status.success());
    assert!(layerkit(&["degree"], &b).status.success());
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn sweep_table_reproduces_reported_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(layerkit(&["residual-sweep"], &out).status.success());
    let mut reader = csv::Reader::from_path(out.join("residuals.csv")).unwrap();
    let mut eps = Vec::new();
    let mut r_u = Vec::new();
    let mut slopes = Vec::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        eps.push(rec[0].parse::<f64>().unwrap());
        r_u.push(rec[1].parse::<f64>().unwrap());
        slopes.push(rec[5].parse::<f64>().unwrap());
    }
    let reported = json(&out.join("summary.json"))["fit"]["slope_r_u"].as_f64().unwrap();
    let refit = loglog_slope(&eps, &r_u);
    assert!((refit - reported).abs() <= 1e-12, "refit {refit} vs reported {reported}");
    assert!(slopes.iter().all(|s| *s == reported));
}
