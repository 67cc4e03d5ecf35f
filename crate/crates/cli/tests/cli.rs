use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisoperi"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: Option<&Path>, extra: &[&str]) -> Output {
    let mut c = bin();
    c.arg(cmd).arg("--config").arg(config).args(extra);
    if let Some(o) = out {
        c.arg("--out").arg(o);
    }
    c.output().unwrap()
}

const SMALL: &str = r#"{
  "schema": "anisoperi-experiment/1",
  "body": { "kind": "ellipsoid", "semi_axes": [1.0, 2.0, 3.0] },
  "n": 2, "m": 1, "seed": 4,
  "body_info": { "support_samples": 4, "membership_samples": 100 },
  "density": { "fibers": 300 },
  "xray": { "res": 10, "fibers": 12, "iterations": 200, "audit_fibers": 300 },
  "mesh": { "source": "generate", "surface": { "kind": "flat_wulff_homothet", "semi_axes": [1.0, 2.0, 3.0], "scale": 1.0 }, "h": 0.2 },
  "transport": { "samples": 200 },
  "john": { "samples": 500, "facet_budget": 200 }
}"#;

#[test]
fn every_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    for cmd in ["body-info", "density-audit", "xray", "verify", "transport", "john", "constants"] {
        let (a, b) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        let ra = run(cmd, &cfg, Some(&a), &[]);
        let rb = run(cmd, &cfg, Some(&b), &["--threads", "1"]);
        assert!(ra.status.success(), "{cmd}: {}", String::from_utf8_lossy(&ra.stderr));
        assert!(rb.status.success(), "{cmd}: {}", String::from_utf8_lossy(&rb.stderr));
        assert_eq!(ra.stdout, rb.stdout, "{cmd} stdout differs");
        let mut files: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(files.iter().any(|f| f == "manifest.json"));
        for f in files {
            assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap(), "{cmd}: {f:?}");
        }
    }
}

#[test]
fn envelope_carries_hash_seed_and_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = run("constants", &cfg, None, &[]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "anisoperi-output/1");
    assert_eq!(v["command"], "constants");
    assert_eq!(v["seed"], 4);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert!(v["tolerances"]["fiber_quadrature"].as_f64().unwrap() > 0.0);
    assert!((v["result"]["c"].as_f64().unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);

    let over = run("constants", &cfg, None, &["--seed", "99"]);
    let w: Value = serde_json::from_slice(&over.stdout).unwrap();
    assert_eq!(w["seed"], 99);
    assert_ne!(w["config_hash"], v["config_hash"]);
}

#[test]
fn body_info_reports_w_star() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = run("body-info", &cfg, None, &[]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let area = v["result"]["w_star"]["area"].as_f64().unwrap();
    assert!((area - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    assert_eq!(v["result"]["membership"]["shrunk_support_points_inside"], 100);
}

#[test]
fn density_audit_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out_dir = dir.path().join("run");
    let out = run("density-audit", &cfg, Some(&out_dir), &[]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("density_audit.csv")).unwrap();
    assert!(csv.starts_with("fiber_id,direction,offset,integral,slack"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["violations"], 0);
    assert_eq!(csv.lines().count(), 1 + v["result"]["fibers"].as_u64().unwrap() as usize);
}

#[test]
fn homothet_verify_is_an_equality_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = run("verify", &cfg, None, &[]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["result"]["report"];
    let rel = r["slack_sharp"].as_f64().unwrap() / r["rhs_sharp"].as_f64().unwrap();
    assert!(rel.abs() < 0.01, "{rel}");
}

#[test]
fn missing_seed_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema":"anisoperi-experiment/1","n":2,"m":1}"#);
    assert_eq!(run("constants", &cfg, None, &[]).status.code(), Some(2));
    assert_eq!(run("constants", &cfg, None, &["--seed", "1"]).status.code(), Some(0));
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "u.json",
        r#"{"schema":"anisoperi-experiment/1","n":2,"m":1,"seed":1,"colour":"red"}"#,
    );
    assert_eq!(run("constants", &unknown, None, &[]).status.code(), Some(2));
    let wrong = write_config(dir.path(), "w.json", r#"{"schema":"other/1","n":2,"m":1,"seed":1}"#);
    assert_eq!(run("constants", &wrong, None, &[]).status.code(), Some(2));
    let bad_body = write_config(
        dir.path(),
        "b.json",
        r#"{"schema":"anisoperi-experiment/1","n":2,"m":1,"seed":1,"body":{"kind":"ellipsoid","semi_axes":[1,-2,3]}}"#,
    );
    assert_eq!(run("body-info", &bad_body, None, &[]).status.code(), Some(2));
    assert_eq!(bin().arg("frob").output().unwrap().status.code(), Some(2));
}

#[test]
fn oversized_program_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "x.json",
        r#"{"schema":"anisoperi-experiment/1","n":2,"m":1,"seed":1,
            "body":{"kind":"ball","dim":3},
            "xray":{"res":64,"fibers":360,"memory_cap_mb":1}}"#,
    );
    let out = run("xray", &cfg, None, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
