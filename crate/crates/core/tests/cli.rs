use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fourier-eigen"))
        .args(args)
        .env_remove("FOURIER_EIGEN_THREADS")
        .output()
        .expect("spawn fourier-eigen")
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn eval_f4_closed_form() {
    let out = run(&["eval", "--fn", "f_d", "--d", "4", "--grid", "1:10:10"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["x", "value"]);
    assert_eq!(rows.len(), 10);
    for row in rows {
        let r = row[0];
        let expected = (1.0 - 2.0 * (-r * r).exp()) / (r * r);
        assert!((row[1] - expected).abs() <= 1e-14 * expected.abs());
    }
}

#[test]
fn eval_delta_zero_sign_convention() {
    // Signed powers make Ei^0 = G - H = e^x - 2 on the positive axis.
    let out = run(&["eval", "--fn", "ei_delta", "--delta", "0", "--grid", "0.5:2:4"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    for row in rows {
        let expected = row[0].exp() - 2.0;
        assert!((row[1] - expected).abs() <= 1e-15 * row[0].exp());
    }
}

#[test]
fn eval_thermal_row_count_and_json() {
    let out = run(&["eval", "--fn", "e_th", "--t", "1", "--grid", "0.1:5:50"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&out).1.len(), 50);

    let out = run(&["--format", "json", "eval", "--fn", "e_th", "--t", "1", "--grid", "0.1:5:50"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 50);
    assert!(doc["rows"].as_array().unwrap().iter().all(|r| r[1].as_f64().unwrap() > 0.0));
}

#[test]
fn eval_missing_parameter_is_usage_error() {
    assert_eq!(run(&["eval", "--fn", "f_d", "--grid", "1:2:3"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--fn", "ei_delta", "--grid", "1:2:3"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--fn", "f_d", "--d", "4", "--grid", "2:1"]).status.code(), Some(2));
}

#[test]
fn transform_compare_residuals() {
    let out = run(&["transform", "--fn", "f_d", "--d", "3", "--grid", "0.2:10:40", "--compare"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["rho", "value", "reference", "residual"]);
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r[3] < 1e-6));

    let out = run(&["transform", "--fn", "f_d_alpha", "--alpha", "0.1", "--d", "6", "--grid", "0.5:3:6", "--compare"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(csv_rows(&out).1.iter().all(|r| r[1].is_finite() && r[3] < 1e-6));
}

#[test]
fn transform_compare_failure_exits_one() {
    let out = run(&["--tol", "1e-300", "transform", "--fn", "f_d", "--d", "3", "--grid", "0.2:10:5", "--compare"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thermal_rows_and_bad_time() {
    let out = run(&["thermal", "--t", "1", "--grid", "0.5:2:3"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["radius", "e_th", "e_s"]);
    assert_eq!(rows.len(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("amplitude 3.14159"));
    assert_eq!(run(&["thermal", "--t", "0"]).status.code(), Some(2));
}

#[test]
fn verify_json_schema() {
    let out = run(&["--format", "json", "verify", "--d", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(doc["summary"]["total"].as_u64().unwrap() as usize, checks.len());
    for c in checks {
        assert_eq!(c["d"], 5);
        assert_eq!(c["passed"], true);
        for key in ["id", "relation", "residual", "tolerance"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
        assert!(c.get("runtime_ms").is_none());
    }

    let out = run(&["--format", "json", "--timings", "verify", "--d", "5"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["checks"].as_array().unwrap().iter().all(|c| c["runtime_ms"].is_number()));
}

#[test]
fn verify_bad_dimension() {
    assert_eq!(run(&["verify", "--d", "9"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--d", "0"]).status.code(), Some(2));
}

#[test]
fn report_covers_dimension_range() {
    let out = run(&["--format", "json", "report", "--dims", "1:3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let mut dims: Vec<u64> = doc["checks"].as_array().unwrap().iter().map(|c| c["d"].as_u64().unwrap()).collect();
    dims.dedup();
    assert_eq!(dims, [1, 2, 3]);
}

#[test]
fn config_file_layering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("settings.toml");
    let target = dir.path().join("from_config.json");
    fs::write(&cfg, format!("format = \"json\"\nout = {:?}\n", target.to_str().unwrap())).unwrap();

    let out = run(&["--config", cfg.to_str().unwrap(), "verify", "--d", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_slice(&fs::read(&target).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);

    // Flags win over the file.
    let flag_target = dir.path().join("from_flag.csv");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        flag_target.to_str().unwrap(),
        "verify",
        "--d",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&flag_target).unwrap();
    assert!(text.starts_with("d,check,relation,residual,tolerance,passed\n"));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "verify", "--d", "1"]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let one = Command::new(env!("CARGO_BIN_EXE_fourier-eigen"))
        .args(["verify", "--d", "3"])
        .env("FOURIER_EIGEN_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_fourier-eigen"))
        .args(["verify", "--d", "3"])
        .env("FOURIER_EIGEN_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_fourier-eigen"))
        .args(["verify", "--d", "3"])
        .env("FOURIER_EIGEN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
