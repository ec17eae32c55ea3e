//! End-to-end checks of the `zeck` binary: output shape, byte-level
//! determinism, and the documented exit codes.

use std::process::{Command, Output};

fn zeck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn decompose_reports_digits_and_round_trip() {
    let out = zeck(&["decompose", "--rec", "L=2;c=1,1", "--n", "10"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["digits"], serde_json::json!([1, 0, 0, 1, 0]));
    assert_eq!(v["recomposed"], "10");
}

#[test]
fn output_is_byte_deterministic() {
    for args in [
        vec!["constants", "--rec", "L=4;c=1,0,0,2"],
        vec!["chain", "--rec", "L=2;c=2,1", "--dump"],
        vec![
            "sample", "--rec", "L=2;c=1,1", "--length", "50", "--trials", "200", "--seed", "7",
        ],
        vec!["maxgap", "--rec", "L=2;c=1,1", "--n", "120", "--k", "0..2"],
    ] {
        let a = zeck(&args);
        let b = zeck(&args);
        assert!(a.status.success(), "{args:?}: {:?}", a.status);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?} not deterministic");
    }
}

#[test]
fn sample_seed_changes_output() {
    let base = vec![
        "sample", "--rec", "L=2;c=1,1", "--length", "50", "--trials", "200",
    ];
    let a = zeck(&[base.clone(), vec!["--seed", "7"]].concat());
    let b = zeck(&[base.clone(), vec!["--seed", "8"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn csv_format_flattens_keys() {
    let out = zeck(&["gaps", "--rec", "L=2;c=1,1", "--kmax", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("mass.0,")));
    assert!(text.lines().any(|l| l.starts_with("total_mass,")));
}

#[test]
fn raw_csv_emits_one_row_per_trial() {
    let out = zeck(&[
        "sample", "--rec", "L=2;c=1,1", "--length", "30", "--trials", "25", "--seed", "1",
        "--raw-csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("trial,weight,nonzero_digits,digit_sum,max_gap")
    );
    assert_eq!(lines.count(), 25);
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = std::env::temp_dir().join("zeck-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("config.json");
    std::fs::write(&path, r#"{"rec": "L=2;c=1,1", "n": "10"}"#).unwrap();
    let out = zeck(&["decompose", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["digits"], serde_json::json!([1, 0, 0, 1, 0]));
}

#[test]
fn verify_passes_on_test_recurrences() {
    for rec in ["L=2;c=1,1", "L=1;c=2", "L=3;c=1,1,1", "L=4;c=1,0,0,2", "L=2;c=2,1"] {
        let out = zeck(&["verify", "--rec", rec]);
        assert!(out.status.success(), "verify {rec}");
        assert_eq!(stdout_json(&out)["pass"], serde_json::json!(true));
    }
}

#[test]
fn exit_code_2_on_malformed_input() {
    // Coefficient count does not match the length.
    let out = zeck(&["constants", "--rec", "L=2;c=1"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing required value.
    let out = zeck(&["decompose", "--rec", "L=2;c=1,1"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown flag (clap error).
    let out = zeck(&["constants", "--rec", "L=2;c=1,1", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn exit_code_3_when_law_assumptions_fail() {
    // The max-gap law needs all coefficients positive.
    let out = zeck(&["maxgap", "--rec", "L=4;c=1,0,0,2", "--n", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn exit_code_4_on_budget_guard() {
    // Enumeration at this length would stream billions of strings.
    let out = zeck(&["oracle", "--rec", "L=2;c=1,1", "--length", "60"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(zeck(&["--help"]).status.code(), Some(0));
    assert_eq!(zeck(&["--version"]).status.code(), Some(0));
}
