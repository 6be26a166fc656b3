use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_massqcrb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn min_mass_schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/min-mass.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn min_mass_fock_three() {
    let out = run(&["min-mass", "--state", "fock:3", "--tau", "pi/2"]);
    let v = stdout_json(&out);
    assert!(min_mass_schema().is_valid(&v));
    let d = v["delta_m_over_m"].as_f64().unwrap();
    assert!((d - 0.39223).abs() < 1e-5);
}

#[test]
fn min_mass_ground_state_two_shots() {
    let v = stdout_json(&run(&["min-mass", "--state", "fock:0", "--tau", "pi/2", "--n", "2"]));
    assert!((v["delta_m_over_m"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn min_mass_at_zero_time_is_unbounded() {
    let v = stdout_json(&run(&["min-mass", "--state", "on:3", "--tau", "0"]));
    assert_eq!(v["delta_m_over_m"], "inf");
    assert!(min_mass_schema().is_valid(&v));
}

#[test]
fn min_mass_csv_layout() {
    let out = run(&["min-mass", "--state", "cat2:1", "--tau", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("state,tau,f,delta_m_over_m,n_measurements"));
    assert_eq!(lines.next().unwrap().split(',').count(), 5);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["min-mass", "--state", "fock:x", "--tau", "1"]).status.code(), Some(1));
    assert_eq!(run(&["min-mass", "--tau", "1"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["min-mass", "--state", "fock:1", "--tau", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    // A coherent state too large for the Fock cutoff is a numerical failure.
    let out = run(&["min-mass", "--state", "coherent:1000", "--tau", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"state": "fock:3", "tau": 1.5707963267948966, "n": 4, "format": "csv"}"#).unwrap();
    let out = run(&["min-mass", "--config", cfg.to_str().unwrap(), "--n", "1", "--format", "json"]);
    let v = stdout_json(&out);
    assert_eq!(v["n_measurements"], 1);
    assert_eq!(v["state"], "fock:3");

    std::fs::write(&cfg, r#"{"stat": "fock:3"}"#).unwrap();
    let out = run(&["min-mass", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn optimize_is_seeded_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("best.json");
    let args = [
        "optimize", "--l", "4", "--tau", "pi/2", "--restarts", "64", "--seed", "7",
        "--state-out", state.to_str().unwrap(),
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert!((v["f_abs"].as_f64().unwrap() / 17.19272 - 1.0).abs() < 1e-3);

    let spec = format!("custom:{}", state.display());
    let m = stdout_json(&run(&["min-mass", "--state", &spec, "--tau", "pi/2"]));
    let f = m["f"].as_f64().unwrap();
    assert!((f.abs() - v["f_abs"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn optimize_single_level() {
    let v = stdout_json(&run(&["optimize", "--l", "0", "--tau", "1.1", "--restarts", "2"]));
    let expect = 1.1f64.sin().powi(2) / 2.0;
    assert!((v["f_abs"].as_f64().unwrap() - expect).abs() < 1e-14);
}

#[test]
fn wigner_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let out = run(&[
        "wigner", "--state", "fock:1", "--range", "6", "--resolution", "33", "--format", "csv",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# x0_units");
    assert!(lines[1].starts_with("x: ") && lines[2].starts_with("p: "));
    assert_eq!(lines.len(), 3 + 33);
    // Center of an odd grid is the origin.
    let center: f64 = lines[3 + 16].split(',').nth(16).unwrap().parse().unwrap();
    assert!((center + std::f64::consts::FRAC_1_PI).abs() < 1e-10);

    let bad = run(&["wigner", "--state", "fock:0", "--out", "/nonexistent/dir/w.csv", "--format", "csv"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn physical_micromachined() {
    let v = stdout_json(&run(&[
        "physical", "--mass-g", "1e-16", "--omega", "1e9", "--time-s", "1e-3", "--mean-quanta", "1e10",
    ]));
    let g = v["delta_m_g"].as_f64().unwrap();
    assert!(g > 0.5e-27 && g < 2e-27);
    let out = run(&["physical", "--mass-g", "1e-16", "--omega", "1e9", "--time-s", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thermal_inset_columns() {
    let out = run(&["thermal", "--inset", "--z", "1,10", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(
        "z,exact,convexity_series,convexity_envelope,convexity_quadratic,x2_measurement\n"
    ));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sweep_fig1_json_rows() {
    let v = stdout_json(&run(&["sweep-fig1", "--tau-max", "pi", "--steps", "2", "--restarts", "4"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let last = &rows[2];
    let (opt, on) = (last["optimal"].as_f64().unwrap(), last["on"].as_f64().unwrap());
    assert!((opt / on - 1.0).abs() < 1e-8);
    assert_eq!(rows[0]["fock"].as_f64(), Some(0.0));
}
