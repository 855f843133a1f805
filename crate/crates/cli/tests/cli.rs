use std::process::{Command, Output};

use serde_json::Value;

const SUTHERLAND_ONE: &str = r#"{"model":"sutherland","n":1,"kappa":1.0,"q":[0.7],"p":[-0.3]}"#;
const RS_TWO: &str = r#"{"model":"rs","n":2,"kappa":1.0,"p_hat":[1.0,-1.0],"q_hat":[0.0,0.0]}"#;

fn dualax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualax"))
        .args(args)
        .env_remove("DUALAX_TOL_SCALE")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn golden_sutherland() -> String {
    let a = 1f64.asinh() / 2.0;
    format!(r#"{{"model":"sutherland","n":2,"kappa":1.0,"q":[{a},{}],"p":[0.0,0.0]}}"#, -a)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn map_single_particle() {
    let out = dualax(&["map", "--state", SUTHERLAND_ONE, "--direction", "s1-to-s2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(floats(&v["state"]["p_hat"]), vec![-0.3]);
    assert_eq!(floats(&v["state"]["q_hat"]), vec![-0.7]);
    assert_eq!(v["state"]["model"], "rs");
}

#[test]
fn map_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let fwd = dir.path().join("fwd.json");
    let back = dir.path().join("back.json");
    let input = golden_sutherland();
    let out = dualax(&["map", "--state", &input, "--output", fwd.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let mapped: Value = serde_json::from_str(&std::fs::read_to_string(&fwd).unwrap()).unwrap();
    let p_hat = floats(&mapped["state"]["p_hat"]);
    assert!((p_hat[0] - 1.0).abs() < 1e-10 && (p_hat[1] + 1.0).abs() < 1e-10);
    std::fs::write(dir.path().join("state.json"), mapped["state"].to_string()).unwrap();
    let state_path = dir.path().join("state.json");
    let out = dualax(&[
        "map",
        "--state",
        state_path.to_str().unwrap(),
        "--direction",
        "s2-to-s1",
        "--output",
        back.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&back).unwrap()).unwrap();
    let a = 1f64.asinh() / 2.0;
    let q = floats(&v["state"]["q"]);
    assert!((q[0] - a).abs() < 1e-8 && (q[1] + a).abs() < 1e-8);
}

#[test]
fn wrong_direction_is_rejected() {
    let out = dualax(&["map", "--state", RS_TWO, "--direction", "s1-to-s2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn lax_and_spectrum() {
    let v = json(&dualax(&["lax", "--state", RS_TWO]));
    let e = floats(&v["eigenvalues"]);
    assert!((e[0] - 2.4142136).abs() < 1e-7 && (e[1] - 0.4142136).abs() < 1e-7);
    assert_eq!(v["matrix"]["n"], 2);
    let one = json(&dualax(&["lax", "--state", SUTHERLAND_ONE]));
    assert_eq!(floats(&one["matrix"]["re"][0]), vec![-0.3]);
    let s = json(&dualax(&["spectrum", "--state", &golden_sutherland()]));
    let e = floats(&s["eigenvalues"]);
    assert!((e[0] - 1.0).abs() < 1e-10 && (e[1] + 1.0).abs() < 1e-10);
}

#[test]
fn kappa_flag_wins() {
    let a = json(&dualax(&["lax", "--state", RS_TWO, "--kappa", "2"]));
    let b = json(&dualax(&["lax", "--state", RS_TWO]));
    assert_ne!(a["eigenvalues"], b["eigenvalues"]);
    let no_kappa = r#"{"model":"sutherland","n":1,"q":[0.0],"p":[1.0]}"#;
    assert_eq!(dualax(&["lax", "--state", no_kappa]).status.code(), Some(2));
    assert_eq!(dualax(&["lax", "--state", no_kappa, "--kappa", "1"]).status.code(), Some(0));
}

#[test]
fn malformed_input_exits_two_without_output() {
    for state in [
        "{",
        r#"{"model":"sutherland","n":2,"kappa":1,"q":[0.1,0.1],"p":[0,0]}"#,
        r#"{"model":"rs","n":2,"kappa":1,"p_hat":[1,-1]}"#,
        "/nonexistent/state.json",
    ] {
        let out = dualax(&["spectrum", "--state", state]);
        assert_eq!(out.status.code(), Some(2), "{state}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn failed_write_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let out = dualax(&["spectrum", "--state", "{", "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn flow_csv() {
    let out = dualax(&[
        "flow", "--state", &golden_sutherland(), "--family", "H", "--index", "2", "--t", "1", "--steps", "10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0], "t,q1,q2,p1,p2,H1,H2");
    let last: Vec<f64> = lines[11].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    // ½ln(√2·cosh2 + √(2cosh²2 − 1))
    assert!((last[1] - 1.1778864126691529).abs() < 1e-8);
    assert!((last[6] - 1.0).abs() < 1e-9);
}

#[test]
fn free_particle_flow_is_linear() {
    let out = dualax(&["flow", "--state", SUTHERLAND_ONE, "--family", "H", "--index", "2", "--t", "2", "--steps", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let row: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((row[1] - (0.7 - 0.3 * row[0])).abs() < 1e-14);
    }
}

#[test]
fn flow_json_and_bad_spec() {
    let v = json(&dualax(&[
        "flow", "--state", RS_TWO, "--family", "Hhat", "--index", "-1", "--t", "0.5", "--steps", "2", "--format", "json",
    ]));
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
    let out = dualax(&["flow", "--state", RS_TWO, "--family", "Hhat", "--index", "0", "--t", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dualax(&["flow", "--state", RS_TWO, "--family", "H", "--index", "1", "--t", "1", "--steps", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_contract() {
    let out = dualax(&["verify", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["checks"].as_array().unwrap().len(), 0);
    assert_eq!(v["pass"], true);

    let args = ["verify", "--n", "2", "--kappa", "1", "--samples", "3", "--seed", "7"];
    let a = dualax(&args);
    let b = dualax(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let strict = dualax(&["verify", "--n", "2", "--kappa", "1", "--samples", "3", "--tol", "commutation_s1=1e-300"]);
    assert_eq!(strict.status.code(), Some(1));
    assert_eq!(json(&strict)["pass"], false);

    assert_eq!(dualax(&["verify", "--tol", "bogus=1"]).status.code(), Some(2));
    assert_eq!(dualax(&["verify", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn tolerance_scale_env() {
    let out = Command::new(env!("CARGO_BIN_EXE_dualax"))
        .args(["verify", "--n", "2", "--kappa", "1", "--samples", "2"])
        .env("DUALAX_TOL_SCALE", "1e-300")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["config"]["tol_scale"], 1e-300);
    let bad = Command::new(env!("CARGO_BIN_EXE_dualax"))
        .args(["verify", "--samples", "0"])
        .env("DUALAX_TOL_SCALE", "abc")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reload_is_idempotent() {
    let out = dualax(&["map", "--state", &golden_sutherland()]);
    let v = json(&out);
    let state = v["state"].to_string();
    let again = json(&dualax(&["spectrum", "--state", &state]));
    let direct = json(&dualax(&["lax", "--state", &state]));
    assert_eq!(again["eigenvalues"], direct["eigenvalues"]);
}
