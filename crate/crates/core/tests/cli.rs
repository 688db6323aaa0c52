//! End-to-end runs of the `plsim` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plsim::cli::config::RunConfig;

fn plsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plsim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
  "damping": {"a": 1.0, "b": 1.0, "c": 1.0},
  "grid": {"n_cells": 20},
  "integrator": {"dt": 0.01, "t_end": 1.0, "snapshot_stride": 50},
  "outputs": {"formats": ["csv", "json", "svg"], "energy_stride": 5}
}"#;

#[test]
fn zero_data_give_zero_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("\"grid\"", "\"initial_conditions\": {\"kind\": \"zero\"},\n  \"grid\""));
    let out = tmp.path().join("out");
    let o = plsim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("energy.csv")).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for cell in rec.iter().skip(1).filter(|c| !c.is_empty()) {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
        }
        rows += 1;
    }
    // steps 0, 5, ..., 100
    assert_eq!(rows, 21);
    assert!(out.join("summary.json").exists() && out.join("energy.svg").exists());
}

#[test]
fn dumped_config_parses_back_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = plsim(&["simulate", "--config", &cfg, "--dt", "0.02", "--damping", "0,1,0", "--dump-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let parsed = RunConfig::from_json(&text).unwrap();
    assert_eq!(parsed.integrator.dt, 0.02);
    assert_eq!((parsed.damping.a, parsed.damping.b, parsed.damping.c), (0.0, 1.0, 0.0));
    assert_eq!(RunConfig::from_json(&parsed.to_json()).unwrap(), parsed);
    assert_eq!(parsed.to_json().trim_end(), text.trim_end());
}

#[test]
fn repeated_runs_write_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let o = plsim(&["simulate", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut compared = 0;
    for name in ["energy.csv", "fields_xt.csv", "snapshots/step_00000000.csv", "snapshots/step_00000100.csv"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        let b = fs::read(dirs[1].join(name)).unwrap();
        assert!(a == b, "{name} differs");
        compared += 1;
    }
    assert_eq!(compared, 4);
}

#[test]
fn csv_values_carry_seventeen_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    assert!(plsim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,E_total,E_kinetic,E_potential,E_magnetic,E_electrical,balance_residual"
    );
    let e0 = lines.next().unwrap().split(',').nth(1).unwrap().to_string();
    let mantissa = e0.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{e0}");
    assert!(!text.contains(';'));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"grid": {"n_cells": 20, "cells": 3}}"#);
    let o = plsim(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn negative_damping_is_rejected() {
    let o = plsim(&["simulate", "--damping", "1,-1,0", "--dump-config"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_command_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("spec");
    let o = plsim(&["spectrum", "--n-cells", "16", "--damping", "1,1,1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let rows = text.lines().count() - 1;
    assert!(rows > 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert!(report["spectral_abscissa"].as_f64().unwrap() < 0.0);
}

#[test]
fn dense_cap_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_plsim"))
        .args(["spectrum", "--n-cells", "40", "--out", tmp.path().to_str().unwrap()])
        .env("PLSIM_MAX_DENSE_N", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
