use std::path::PathBuf;
use std::process::{Command, Output};

fn ginreal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ginreal")).args(args).env_remove("GINREAL_WORKERS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ginreal-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn without_wall_time(s: &str) -> String {
    s.lines().filter(|l| !l.starts_with("# wall_time_s:")).collect::<Vec<_>>().join("\n")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(ginreal(&["--help"]).status.code(), Some(0));
    assert_eq!(ginreal(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_command_or_flag_is_usage_error() {
    let o = ginreal(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(ginreal(&["density", "--no-such-flag"]).status.code(), Some(64));
}

#[test]
fn precondition_violation_exits_two() {
    assert_eq!(ginreal(&["expected-count", "--N", "0"]).status.code(), Some(2));
    assert_eq!(ginreal(&["mc", "--m", "0", "--trials", "2"]).status.code(), Some(2));
    assert_eq!(ginreal(&["mc", "--seed", "abc", "--trials", "2"]).status.code(), Some(2));
}

#[test]
fn unconverged_series_still_writes_artifact() {
    let path = tmp("gap.csv");
    let o = ginreal(&["gap", "--N", "50", "--a", "-2", "--b", "2", "--ell-max", "1", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let s = std::fs::read_to_string(&path).unwrap();
    assert!(s.contains("# converged: false"));
    assert!(s.contains("converged,false"));
}

#[test]
fn csv_starts_with_metadata_block() {
    let o = ginreal(&["edge-cdf", "--s-min", "-1", "--s-max", "0", "--step", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let meta: Vec<&str> = s.lines().take_while(|l| l.starts_with('#')).collect();
    for key in ["# command: edge-cdf", "# parameter.s_min: -1", "# seed:", "# version:", "# wall_time_s:"] {
        assert!(meta.iter().any(|l| l.starts_with(key)), "missing {key} in {meta:?}");
    }
    let body: Vec<&str> = s.lines().skip_while(|l| l.starts_with('#')).collect();
    assert_eq!(body[0], "s,cdf,tail_estimate,ell_max,converged");
    assert_eq!(body.len(), 4);
    let cdf: Vec<f64> = body[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(cdf.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn json_has_meta_and_data_objects() {
    let o = ginreal(&["--format", "json", "expected-count", "--N", "20", "--m", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["command"], "expected-count");
    assert_eq!(v["meta"]["parameters"]["N"], 20);
    assert_eq!(v["meta"]["parameters"]["m"], 2);
    assert_eq!(v["meta"]["converged"], true);
    assert_eq!(v["data"]["count"]["columns"][0], "key");
}

#[test]
fn missing_values_use_sentinels() {
    // a single real eigenvalue at most, never a positive one for some trials
    let o = ginreal(&["--format", "json", "mc", "--N", "2", "--trials", "3", "--per-trial"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(!text.contains("null"));
    assert!(text.contains("\"NA\""));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for row in v["data"]["per_trial"]["rows"].as_array().unwrap() {
        for cell in row.as_array().unwrap() {
            assert!(cell.is_number() || cell == "NA", "{cell}");
        }
    }
}

#[test]
fn mc_output_is_reproducible() {
    let run = |workers: &str, name: &str| {
        let path = tmp(name);
        let o = ginreal(&["--workers", workers, "mc", "--N", "40", "--m", "2", "--trials", "60", "--seed", "7", "--f", "gauss", "-o", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("1", "mc.csv");
    let b = run("1", "mc.csv");
    assert_eq!(without_wall_time(&a), without_wall_time(&b));
    let c = run("2", "c.csv");
    let data = |s: &str| s.lines().skip_while(|l| l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(data(&a), data(&c));
}

#[test]
fn workers_default_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_ginreal"))
        .args(["mc", "--N", "4", "--trials", "2"])
        .env("GINREAL_WORKERS", "2")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("# parameter.workers: 2"));
}

#[test]
fn every_command_runs() {
    let cases: &[&[&str]] = &[
        &["kernel-eval", "--N", "10", "--regime", "bulk", "--step", "1"],
        &["kernel-eval", "--regime", "origin-limit", "--m", "2", "--x-min", "0.5", "--x-max", "1", "--step", "0.5"],
        &["density", "--N", "10", "--step", "0.4"],
        &["variance", "--N", "20", "--f", "gauss", "--quad-order", "4"],
        &["gap", "--N", "10", "--a", "0.5", "--b", "3"],
        &["origin-cdf", "--s-min", "0.5", "--s-max", "1", "--step", "0.5", "--grid-order", "8"],
        &["clt", "--N", "10", "--trials", "50"],
        &["asy-check", "--sizes", "100", "--edge-sizes", "400", "--m", "1"],
        &["cluster", "--N", "100"],
    ];
    for args in cases {
        let o = ginreal(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let s = stdout(&o);
        assert!(!s.contains(",NaN") && !s.contains("inf,"), "{args:?}");
    }
}

#[test]
fn json_output_matches_published_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/output.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let cases: &[&[&str]] = &[
        &["kernel-eval", "--N", "10", "--step", "1"],
        &["density", "--N", "10", "--step", "0.6"],
        &["expected-count", "--N", "10", "--a", "0", "--b", "1"],
        &["variance", "--N", "10", "--quad-order", "4", "--trials", "20"],
        &["gap", "--N", "10", "--a", "0.5", "--b", "3"],
        &["edge-cdf", "--s-min", "0", "--s-max", "0"],
        &["origin-cdf", "--s-min", "1", "--s-max", "1", "--grid-order", "8"],
        &["mc", "--N", "2", "--trials", "5", "--per-trial", "--seed", "18446744073709551615"],
        &["clt", "--N", "6", "--trials", "20"],
        &["asy-check", "--sizes", "100", "--edge-sizes", "400", "--m", "1"],
        &["cluster", "--N", "100"],
    ];
    for args in cases {
        let mut full = vec!["--format", "json"];
        full.extend_from_slice(args);
        let o = ginreal(&full);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let mut broken: serde_json::Value = serde_json::from_slice(&ginreal(&["--format", "json", "cluster"]).stdout).unwrap();
    broken["data"].as_object_mut().unwrap().remove("fit");
    assert!(!validator.is_valid(&broken));
}
