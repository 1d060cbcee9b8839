use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn ccsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccsc")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn edited(name: &str, edit: impl FnOnce(&mut Value)) -> tempfile::NamedTempFile {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
    edit(&mut v);
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), v.to_string()).unwrap();
    file
}

#[test]
fn eval_json_has_one_rate_per_user() {
    let o = ccsc(&["eval", fixture("two_user_bpsk.json").to_str().unwrap(), "--samples", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["per_user"].as_array().unwrap().len(), 2);
}

#[test]
fn eval_csv_starts_with_version_line() {
    let f = fixture("siso_three_user.json");
    let o = ccsc(&["eval", f.to_str().unwrap(), "--method", "approx", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# ccsc eval v1");
    assert!(lines[1].starts_with("user,rate"));
    assert_eq!(lines.len(), 5);
}

#[test]
fn missing_key_is_a_usage_error_naming_it() {
    let file = edited("two_user_bpsk.json", |v| {
        v.as_object_mut().unwrap().remove("power_db");
    });
    let o = ccsc(&["eval", file.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("power_db"), "{}", stderr(&o));
}

#[test]
fn truncated_file_is_a_usage_error() {
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), "{\"users\": 2,").unwrap();
    assert_eq!(ccsc(&["ccsc", file.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn empty_grid_is_a_usage_error() {
    let f = fixture("two_user_bpsk.json");
    for grid in ["", "5:1:0", "3,1"] {
        let o = ccsc(&["sweep", f.to_str().unwrap(), "--power-db-grid", grid]);
        assert_eq!(o.status.code(), Some(2), "{grid}: {}", stderr(&o));
    }
}

#[test]
fn alignment_needs_three_users() {
    let o = ccsc(&["ia-precoder", fixture("two_user_bpsk.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn singular_cross_channel_is_a_numerical_error() {
    let rank_one = serde_json::json!([[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]]);
    let file = edited("mimo_three_user_b.json", |v| {
        for rx in 0..3 {
            for tx in 0..3 {
                if rx != tx {
                    v["channels"][rx][tx] = rank_one.clone();
                }
            }
        }
    });
    let o = ccsc(&["ia-precoder", file.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn single_iteration_writes_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = dir.path().join("final.json");
    let o = ccsc(&[
        "optimize",
        fixture("mimo_three_user_b.json").to_str().unwrap(),
        "--init",
        "ia",
        "--max-iter",
        "1",
        "--samples",
        "300",
        "--trace-csv",
        trace.to_str().unwrap(),
        "--precoders-out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["iterations"].as_array().unwrap().len(), 1);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    let rerun = ccsc(&["eval", out.to_str().unwrap(), "--samples", "100"]);
    assert!(rerun.status.success(), "{}", stderr(&rerun));
}

#[test]
fn bad_line_search_parameters_are_rejected() {
    let f = fixture("two_user_bpsk.json");
    for (flag, value) in [("--alpha", "0.7"), ("--beta", "1"), ("--epsilon", "-1")] {
        let o = ccsc(&["optimize", f.to_str().unwrap(), flag, value]);
        assert_eq!(o.status.code(), Some(2), "{flag} {value}: {}", stderr(&o));
    }
}

#[test]
fn loose_tolerance_warns() {
    let o = ccsc(&["ccsc", fixture("siso_three_user.json").to_str().unwrap(), "--tol", "1e30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["ccsc"]["per_user_optimal"].as_array().unwrap().iter().all(|b| b == false));
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.json");
    let f = fixture("siso_three_user.json");
    let args = ["eval", f.to_str().unwrap(), "--samples", "150", "--seed", "4"];
    let stdout = ccsc(&args).stdout;
    let mut with_file = args.to_vec();
    with_file.extend(["-o", path.to_str().unwrap()]);
    assert!(ccsc(&with_file).stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn ergodic_rejects_other_shapes() {
    let o = ccsc(&["ergodic", "--users", "4", "--power-db-grid", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn both_alignment_solutions_are_emitted() {
    let f = fixture("mimo_three_user_b.json");
    let mut outputs = Vec::new();
    for rule in ["best", "largest"] {
        let o = ccsc(&["ia-precoder", f.to_str().unwrap(), "--ia-eigenvector", rule, "--samples", "300"]);
        assert!(o.status.success(), "{rule}: {}", stderr(&o));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["precoders"].as_array().unwrap().len(), 3);
        outputs.push(o.stdout);
    }
    // on this channel the higher-rate solution is not the larger-eigenvalue one
    assert_ne!(outputs[0], outputs[1]);
    let bad = ccsc(&["ia-precoder", f.to_str().unwrap(), "--ia-eigenvector", "smallest"]);
    assert_eq!(bad.status.code(), Some(2));
}
