use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qgsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgsp"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("qgsp-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn counting_bracket_contains_ground_energy() {
    let v = json(&qgsp(&[
        "estimate-energy",
        "--family",
        "counting",
        "--marked",
        "4",
        "--h",
        "0.05",
        "--vartheta",
        "0.1",
    ]));
    let b = v["bracket"].as_array().unwrap();
    let (lo, hi) = (b[0].as_f64().unwrap(), b[1].as_f64().unwrap());
    let l0 = -(3.0f64).sqrt() / 2.0;
    assert!(lo < l0 && l0 < hi, "[{lo}, {hi}]");
    assert!(v["ledger"]["U_I"]["fwd"].as_u64().unwrap() > 0);
}

#[test]
fn precondition_violation_exits_2_with_json() {
    let out = qgsp(&["sign-poly", "--delta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "invalid_config");
    let out = qgsp(&["estimate-energy", "--ae-mode", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qgsp(&[
        "prepare",
        "--family",
        "gapless",
        "--delta-gap",
        "0.1",
        "--gamma",
        "0.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    serde_json::from_slice::<Value>(&out.stderr).unwrap();
}

#[test]
fn config_file_with_flag_override() {
    let d = scratch("config");
    let cfg = d.join("run.json");
    std::fs::write(&cfg, r#"{"delta": 0.4, "eps": 0.01, "points": 5}"#).unwrap();
    let v = json(&qgsp(&[
        "sign-poly",
        "--config",
        cfg.to_str().unwrap(),
        "--eps",
        "1e-4",
    ]));
    assert_eq!(v["delta"], 0.4);
    assert_eq!(v["eps"], 1e-4);
    std::fs::write(&cfg, r#"{"dleta": 0.4}"#).unwrap();
    let out = qgsp(&["sign-poly", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn csv_writes_ledger_sidecar() {
    let d = scratch("csv");
    let out = d.join("sweep.csv");
    let o = qgsp(&[
        "reflector-sweep",
        "--points",
        "11",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,operator_norm_error"));
    assert_eq!(lines.count(), 11);
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("sweep.csv.ledger.json")).unwrap())
            .unwrap();
    assert!(side["U_H"]["fwd"].as_u64().unwrap() > 0);
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn csv_on_stdout_ends_with_ledger() {
    let o = qgsp(&["phase-factors", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("j,phase\n"));
    assert!(text
        .trim_end()
        .lines()
        .last()
        .unwrap()
        .starts_with("# ledger: {"));
}

#[test]
fn same_seed_same_bytes_different_seed_differs() {
    let run = |s: &str| {
        qgsp(&[
            "estimate-energy",
            "--family",
            "planted",
            "--seed",
            s,
            "--h",
            "0.02",
        ])
        .stdout
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn prepare_reaches_target_fidelity() {
    let v = json(&qgsp(&[
        "prepare",
        "--family",
        "single-qubit",
        "--a",
        "0.3",
        "--mu",
        "0.7",
    ]));
    assert!(v["fidelity"].as_f64().unwrap() >= 1.0 - 1e-3);
}

#[test]
fn lowerbound_demo_matches_closed_forms() {
    let v = json(&qgsp(&["lowerbound-demo", "--n", "6", "--marked", "4"]));
    let g = &v["grover"];
    let gap = g["lambda_plus"].as_f64().unwrap() - g["lambda_minus"].as_f64().unwrap();
    assert!((gap - 0.25).abs() < 1e-10);
    let c = &v["counting"];
    assert!((c["numeric_max"].as_f64().unwrap() - c["predicted"].as_f64().unwrap()).abs() < 1e-12);
}
