use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn afields(args: &[&str]) -> (bool, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_afields"))
        .args(args)
        .output()
        .unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.success(), v)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("afields-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn model(file: &str) -> String {
    format!("{}/models/{file}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn validate_reports_pass() {
    let (ok, v) = afields(&["validate", "so3", "--samples", "10"]);
    assert!(ok);
    assert_eq!(v["report"]["pass"], true);
    let (ok, v) = afields(&[
        "validate",
        &format!("atiyah:{}", model("atiyah_so3.json")),
        "--samples",
        "10",
    ]);
    assert!(ok);
    assert_eq!(v["rank"], 5);
}

#[test]
fn unknown_model_fails() {
    let (ok, _) = afields(&["validate", "nope"]);
    assert!(!ok);
}

#[test]
fn solve_then_residual_then_legendre() {
    let field = scratch("wave.csv");
    let f = field.to_str().unwrap();
    let (ok, v) = afields(&[
        "solve", "wave", "--steps", "16", "--h", "0.03125", "--out", f,
    ]);
    assert!(ok, "{v}");
    assert_eq!(v["report"]["steps"], 16);

    let (ok, v) = afields(&["residual", "wave", f]);
    assert!(ok, "{v}");
    assert!(v["residual"]["el"]["linf"].as_f64().unwrap() < 1e-9);

    let psi = scratch("psi.csv");
    let (ok, v) = afields(&["legendre", "wave", f, "--psi", psi.to_str().unwrap()]);
    assert!(ok, "{v}");
    assert_eq!(v["transport"]["failed_nodes"], 0);
    let (ok, v) = afields(&["residual", "wave", psi.to_str().unwrap()]);
    assert!(ok, "{v}");
    assert_eq!(v["side"], "hamiltonian");
}

#[test]
fn rigid_body_trajectory() {
    let out = scratch("body.csv");
    let spec = format!("euler-poincare:{}", model("rigid_body.json"));
    let (ok, v) = afields(&[
        "solve",
        &spec,
        "--steps",
        "200",
        "--h",
        "0.01",
        "--initial",
        "0.1,1,0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(ok, "{v}");
    let (e0, e1) = (
        v["energy_initial"].as_f64().unwrap(),
        v["energy_final"].as_f64().unwrap(),
    );
    assert!((e0 - e1).abs() < 1e-9);
}

#[test]
fn convergence_of_exact_wave() {
    let (ok, v) = afields(&["convergence", "wave", "--h-list", "0.0625,0.03125,0.015625"]);
    assert!(ok, "{v}");
    assert_eq!(v["convergence"]["certified"], true);
}

#[test]
fn harmonic_maps_cannot_be_marched() {
    let out = scratch("hm.csv");
    let (ok, _) = afields(&[
        "solve",
        "harmonic",
        "--steps",
        "4",
        "--h",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!ok);
}
