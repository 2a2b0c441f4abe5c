use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sgn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgn")).args(args).output().expect("spawn sgn")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn out_arg(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn unknown_flag_is_usage_error_without_files() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "run");
    let o = sgn(&["gradcheck", "--bogus", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(&out).exists());
}

#[test]
fn unknown_config_key_is_usage_error_without_files() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"instances": 3, "instancez": 4}"#).unwrap();
    let out = out_arg(&dir, "run");
    let o = sgn(&["gradcheck", "--config", cfg.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("instancez"));
    assert!(!Path::new(&out).exists());
}

#[test]
fn invalid_values_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["derive-sigma", "--n", "7"],
        vec!["fit", "--seeds", "0"],
        vec!["fit", "--tasks", "no_such_task"],
        vec!["kernel", "--m", "0"],
        vec!["probe", "--lr", "-1"],
    ] {
        let out = out_arg(&dir, "run");
        let mut full = args.clone();
        full.extend(["--out", &out]);
        assert_eq!(sgn(&full).status.code(), Some(2), "{args:?}");
        assert!(!Path::new(&out).exists(), "{args:?}");
    }
}

#[test]
fn gradcheck_writes_manifest_and_passes() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "gc");
    let o = sgn(&["gradcheck", "--seed", "7", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS max_rel_error"));
    let m = read_json(&Path::new(&out).join("manifest.json"));
    assert_eq!(m["subcommand"], "gradcheck");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["passed"], true);
    assert_eq!(m["config"]["instances"], 20);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    for a in m["artifacts"].as_array().unwrap() {
        assert!(Path::new(&out).join(a.as_str().unwrap()).exists());
    }
    let s = read_json(&Path::new(&out).join("gradcheck.json"));
    assert!(s["max_rel_error"].as_f64().unwrap() < 1e-5);
}

#[test]
fn failed_check_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "gc");
    let o = sgn(&["gradcheck", "--tolerance", "1e-14", "--instances", "2", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read_json(&Path::new(&out).join("manifest.json"))["passed"], false);
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"instances": 3, "samples": 2}"#).unwrap();
    let from_file = out_arg(&dir, "file");
    sgn(&["gradcheck", "--config", cfg.to_str().unwrap(), "--out", &from_file]);
    let m = read_json(&Path::new(&from_file).join("manifest.json"));
    assert_eq!(m["config"]["instances"], 3);
    assert_eq!(m["config"]["samples"], 2);
    assert_eq!(m["config"]["max_d_ff"], 6);
    let from_flag = out_arg(&dir, "flag");
    sgn(&["gradcheck", "--config", cfg.to_str().unwrap(), "--instances", "4", "--out", &from_flag]);
    let s = read_json(&Path::new(&from_flag).join("gradcheck.json"));
    assert_eq!(s["instances"].as_array().unwrap().len(), 4);
}

#[test]
fn complexity_json_format() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "cx");
    let o = sgn(&["complexity", "--format", "json", "--grid", "2,5,9", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_json(&Path::new(&out).join("complexity.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(!Path::new(&out).join("complexity.csv").exists());
    let kan: Vec<u64> = rows
        .iter()
        .filter(|r| r["model"] == "kan")
        .map(|r| r["params"].as_u64().unwrap())
        .collect();
    // d_ff = 3072, K = 3: each grid step adds 3072^2 parameters
    assert_eq!(kan[1] - kan[0], 3 * 3072 * 3072);
}

#[test]
fn short_fit_reports_every_cell() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "fit");
    let o = sgn(&["fit", "--seeds", "2", "--epochs", "5", "--tasks", "simple_product,bessel", "--out", &out]);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    let csv = std::fs::read_to_string(Path::new(&out).join("fit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    assert!(csv.starts_with("model,task,seed,params,min_test_rmse,final_test_rmse,status\n"));
}
