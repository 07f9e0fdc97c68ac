//! End-to-end checks of the binary: exit codes, output schemas, config-file
//! equivalence, and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_buildingwalk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("buildingwalk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn describe_reports_root_data() {
    let out = run(&["describe", "--family", "A", "--rank", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    assert_eq!(v["positive_roots"], 3);
    assert_eq!(v["weyl_order"], 6);
    assert_eq!(v["quotient_order"], 3);
    // Full resolved config rides along with every report.
    assert_eq!(v["config"]["family"], "A");
    assert_eq!(v["config"]["rank"], "2");
}

#[test]
fn spherical_at_unit_character_is_one_for_zero() {
    let out = run(&[
        "spherical", "--family", "A", "--rank", "1", "--q", "2", "--lambda", "0", "--u", "1,1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    assert!((v["value_re"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert!(v["value_im"].as_f64().unwrap().abs() < 1e-14);
}

#[test]
fn llt_csv_has_schema_and_odd_zeros() {
    let out = run(&[
        "llt", "--family", "A", "--rank", "1", "--q", "2", "--walk", "1:1", "--kmax", "24",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("k,exact,asymptote,ratio"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 4);
        let k: u64 = f[0].parse().unwrap();
        let exact: f64 = f[1].parse().unwrap();
        if k % 2 == 1 {
            assert_eq!(exact, 0.0, "odd k = {k} must have zero mass at the origin");
        }
    }
}

#[test]
fn validation_errors_exit_2() {
    // Unknown family.
    let out = run(&["describe", "--family", "Z", "--rank", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(2));
    // Thickness violation.
    let out = run(&["describe", "--family", "A", "--rank", "2", "--q", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // Walk-dependent subcommand without a walk.
    let out = run(&["drift", "--family", "A", "--rank", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cap_errors_exit_3() {
    let out = run(&["describe", "--family", "E", "--rank", "8", "--q", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_64() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn identical_config_and_seed_is_byte_identical() {
    let args = [
        "simulate", "--family", "A", "--rank", "2", "--q", "2", "--walk", "1,0:1",
        "--k", "40", "--trajectories", "200", "--seed", "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    // Thread count must not change the bytes either.
    let mut with_threads = vec!["--threads", "2"];
    with_threads.extend_from_slice(&args);
    let c = run(&with_threads);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn config_file_matches_inline_flags() {
    let path = scratch("walk.conf");
    std::fs::write(
        &path,
        "family = A\nrank = 2\nq = 2\nseed = 5\nwalk.term = 1,0 : 0.75\nwalk.term = 0,1 : 0.25\n",
    )
    .unwrap();
    let from_file = run(&["drift", "--config", path.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0));
    let from_flags = run(&[
        "drift", "--family", "A", "--rank", "2", "--q", "2", "--seed", "5",
        "--walk", "1,0:0.75", "--walk", "0,1:0.25",
    ]);
    assert_eq!(from_flags.status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&from_flags)).unwrap();
    assert_eq!(a["drift"], b["drift"]);
    assert_eq!(a["clt_covariance"], b["clt_covariance"]);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn drift_json_reports_frozen_reference_values() {
    let out = run(&[
        "drift", "--family", "A", "--rank", "2", "--q", "2", "--walk", "1,0:1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let drift = v["drift"].as_array().unwrap();
    assert!((drift[0].as_f64().unwrap() - 2.0 / 7.0).abs() < 1e-12);
    assert!((drift[1].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12);
}
