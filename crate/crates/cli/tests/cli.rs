use std::path::Path;
use std::process::{Command, Output};

use flowroot_cli::scenarios::builtins;
use flowroot_cli::runner::run_scenario;
use flowroot_cli::REPORT_SCHEMA;
use jsonschema::JSONSchema;
use serde_json::Value;

fn flowroot(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowroot"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn schema() -> JSONSchema {
    let s: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    JSONSchema::compile(&s).unwrap()
}

#[test]
fn list_prints_the_registry() {
    let out = Command::new(env!("CARGO_BIN_EXE_flowroot")).arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().any(|l| l == "broken-coherency\texpected failure"));
}

#[test]
fn every_builtin_report_validates() {
    let schema = schema();
    for cfg in builtins() {
        let (r, _) = run_scenario(&cfg);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        let msgs: Vec<String> = match schema.validate(&v) {
            Ok(()) => Vec::new(),
            Err(errs) => errs.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
        };
        assert!(msgs.is_empty(), "{}: {msgs:?}", cfg.name);
    }
}

#[test]
fn run_writes_report_and_field_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowroot(&["run", "circle-antipodal"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("circle-antipodal.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], Value::Bool(true));
    assert!(schema().is_valid(&report));
    let (header, rows) = read_csv(&dir.path().join("circle-antipodal-field.csv"));
    assert_eq!(header, ["theta", "xi_theta"]);
    assert_eq!(rows.len(), 256);
    for r in &rows {
        assert!((r[1] - std::f64::consts::PI).abs() <= 1e-10);
    }
}

#[test]
fn sphere_export_is_tangent() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowroot(&["extract", "s3-antipodal-i"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("s3-antipodal-i-field.csv"));
    assert_eq!(header, ["w", "x", "y", "z", "xi_w", "xi_x", "xi_y", "xi_z"]);
    assert_eq!(rows.len(), 8);
    for r in rows {
        let dot: f64 = (0..4).map(|k| r[k] * r[k + 4]).sum();
        assert!(dot.abs() < 1e-12, "{dot}");
    }
}

#[test]
fn zero_field_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("still.toml");
    std::fs::write(
        &cfg,
        r#"
name = "still"
manifold = "circle"
checks = ["condition-2", "extract"]

[grid]
resolution = 32

[source]
kind = "from-field"
field = { kind = "constant-circle", k = 0.0 }
depth = 6

[extract]
level = 3
reference = { kind = "constant-circle", k = 0.0 }
"#,
    )
    .unwrap();
    let out = flowroot(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (_, rows) = read_csv(&dir.path().join("still-field.csv"));
    assert_eq!(rows.len(), 32);
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn exit_status_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(flowroot(&["verify", "negative-reflection"], dir.path()).status.code(), Some(1));
    assert_eq!(flowroot(&["run", "no-such-scenario"], dir.path()).status.code(), Some(2));
    let json = dir.path().join("small.json");
    let out = flowroot(
        &["verify", "circle-antipodal", "--grid", "16", "--depth", "6", "--tol", "1e-10", "--json", json.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["environment"]["grid_resolution"], 16);
    assert_eq!(report["tolerances"]["conditions"], 1e-10);
    let stages: Vec<&str> = report["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap()).collect();
    assert!(!stages.contains(&"extract") && !stages.contains(&"intertwine"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_flowroot"))
        .args(["symmetry", "group-probe-circle"])
        .env("FLOWROOT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("group-probe-circle.json").is_file());
}

#[test]
fn trajectory_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowroot(&["integrate", "s3-antipodal-i", "--point", "1", "0", "0", "0", "--steps", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("s3-antipodal-i-trajectory.csv"));
    assert_eq!(header, ["t", "w", "x", "y", "z", "error_estimate"]);
    assert_eq!(rows.len(), 5);
    // exp(πit)·1 = cos(πt) + i sin(πt)
    for r in rows {
        let t = r[0];
        assert!((r[1] - (std::f64::consts::PI * t).cos()).abs() < 1e-14);
        assert!((r[2] - (std::f64::consts::PI * t).sin()).abs() < 1e-14);
    }
}

#[test]
fn binary_reports_match_modulo_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        flowroot(&["run", "s3-antipodal-j", "--seed", "3"], d.path());
    }
    let load = |d: &Path| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(d.join("s3-antipodal-j.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v.to_string()
    };
    assert_eq!(load(a.path()), load(b.path()));
}
