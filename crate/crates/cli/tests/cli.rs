use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qpr(dir: &Path, args: &[&str], config: Option<&Value>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qpr"));
    cmd.args(args).arg("--out").arg(dir.join("out")).env("QPR_THREADS", "1");
    if let Some(c) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, serde_json::to_string(c).unwrap()).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn weak_config() -> Value {
    json!({ "field": { "amplitude": 0.02 }, "precision": "fast", "simulate": { "dyson_order": 4 } })
}

#[test]
fn simulate_zero_field_gives_zero_probability() {
    let dir = tempfile::tempdir().unwrap();
    let out = qpr(dir.path(), &["simulate"], Some(&json!({ "field": { "mode_amplitudes": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] } })));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["probability"], 0.0);
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["threads"], 1);
    assert!(dir.path().join("out/resolved-config.json").exists());
    assert!(dir.path().join("out/dyson.csv").exists());
}

#[test]
fn resolved_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qpr(dir.path(), &["simulate", "--seed", "9"], Some(&weak_config())).status.success());
    let first = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let resolved = read_json(&dir.path().join("out/resolved-config.json"));
    assert_eq!(resolved["seed"], 9);
    assert_eq!(resolved["grid"]["n_steps"], 250);
    let again = tempfile::tempdir().unwrap();
    assert!(qpr(again.path(), &["simulate"], Some(&resolved)).status.success());
    assert_eq!(std::fs::read_to_string(again.path().join("out/report.json")).unwrap(), first);
    assert_eq!(read_json(&again.path().join("out/resolved-config.json"))["output"], again.path().join("out").display().to_string());
}

#[test]
fn moments_with_point_masses_equal_nominal() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = weak_config();
    let point = json!({ "law": "point_mass", "value": 1.0, "relative": true });
    cfg["uncertainty"] = json!({ "parameters": [
        { "target": { "kind": "dipole", "i": 0, "j": 3 }, "distribution": point },
        { "target": { "kind": "dipole", "i": 1, "j": 3 }, "distribution": point },
        { "target": { "kind": "dipole", "i": 3, "j": 4 }, "distribution": point },
    ]});
    cfg["moments"] = json!({ "mc_samples": 64 });
    let out = qpr(dir.path(), &["moments"], Some(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&dir.path().join("out/moments.json"));
    let e = m["asymptotic"]["expected_probability"].as_f64().unwrap();
    let p = m["asymptotic"]["nominal_probability"].as_f64().unwrap();
    assert!((e - p).abs() <= 1e-10, "{e} vs {p}");
    // identical draws: only summation roundoff remains
    assert!(m["monte_carlo"]["variance"].as_f64().unwrap() <= 1e-20);
}

#[test]
fn repro_table3_reports_both_mappings() {
    let dir = tempfile::tempdir().unwrap();
    let out = qpr(dir.path(), &["repro", "table3"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("out/table3.json"));
    assert_eq!(r["reference"][1][1], 0.9319);
    assert_eq!(r["mappings"].as_array().unwrap().len(), 2);
    assert_eq!(r["computed"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(dir.path().join("out/table3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn optimizers_run_and_seed_from_front() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = weak_config();
    cfg["tga"] = json!({ "population_size": 8, "generations": 2 });
    cfg["acromuse"] = json!({ "ga": { "population_size": 8, "generations": 2 } });
    cfg["nsga2"] = json!({ "ga": { "population_size": 8, "generations": 2 }, "halfwidth": 0.2 });
    for opt in ["tga", "acromuse", "nsga2"] {
        let out = qpr(dir.path(), &["optimize", opt], Some(&cfg));
        assert!(out.status.success(), "{opt}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let front = dir.path().join("front.json");
    std::fs::rename(dir.path().join("out/front.json"), &front).unwrap();
    let out = qpr(dir.path(), &["optimize", "tga", "--seed-front", front.to_str().unwrap()], Some(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);
}

#[test]
fn verify_landscape_and_pathways_emit_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = weak_config();
    cfg["landscape"] = json!({ "axis1": { "gene": 0, "min": 0.5, "max": 1.5, "n": 3 }, "axis2": { "gene": 7, "min": 0.0, "max": 1.0, "n": 2 } });
    for args in [&["verify", "pmp"][..], &["landscape"], &["pathways"]] {
        let out = qpr(dir.path(), args, Some(&cfg));
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let pmp = read_json(&dir.path().join("out/pmp.json"));
    assert!(pmp["nominal_residual"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read_to_string(dir.path().join("out/landscape.csv")).unwrap().lines().count(), 7);
    assert!(dir.path().join("out/pathways.csv").exists());
}

#[test]
fn errors_carry_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = qpr(dir.path(), &["simulate"], Some(&json!({ "system": "nope" })));
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"], "config");

    let out = qpr(dir.path(), &["simulate"], Some(&json!({ "field": { "bounds": { "freq_min": 2.0, "freq_max": 1.0, "amp_min": 0.0, "amp_max": 1.0 } } })));
    assert_eq!(out.status.code(), Some(4));
}
