//! Black-box tests of the `randchain` binary: exit codes, determinism of
//! emitted artifacts, and config-file dispatch.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn models_list_includes_catalog() {
    let out = run(&["models", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["example_noerg", "example_feed_static", "gossip_complete"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn describe_known_and_unknown() {
    let out = run(&["models", "describe", "example_feed_static"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0.5000") && text.contains("weak feedback"));

    let out = run(&["models", "describe", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_requires_seed() {
    let out = run(&["simulate", "--canned", "gossip_complete"]);
    assert_eq!(out.status.code(), Some(2));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn simulate_artifacts_are_byte_identical_across_runs_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = (0..3).map(|i| tmp.path().join(format!("run{i}"))).collect();
    for (i, dir) in dirs.iter().enumerate() {
        let workers = ["1", "4", "2"][i];
        let out = run(&[
            "--workers", workers,
            "simulate",
            "--canned", "example_cons_nontriv",
            "--seed", "7",
            "--trials", "50",
            "--horizon", "64",
            "--out", dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let baseline_json = read(&dirs[0], "simulate.json");
    let baseline_csv = read(&dirs[0], "trajectory.csv");
    assert!(baseline_csv.starts_with("# config_sha256="));
    for dir in &dirs[1..] {
        assert_eq!(read(dir, "simulate.json"), baseline_json);
        assert_eq!(read(dir, "trajectory.csv"), baseline_csv);
    }
    // The manifest carries the same config hash as the artifacts.
    let manifest = read(&dirs[0], "manifest.json");
    let hash = baseline_json
        .split('"')
        .nth(3)
        .expect("hash field present");
    assert!(manifest.contains(hash));
}

#[test]
fn flow_identity_tail_is_stalled() {
    let out = run(&[
        "flow",
        "--canned", "example_cons_nontriv",
        "--seed", "3",
        "--horizon", "256",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("stalled"));
}

#[test]
fn check_gossip_reports_uniform_steady_state() {
    let out = run(&["check", "--canned", "gossip_complete", "--seed", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0.125"), "{text}");
    assert!(text.contains("\"gamma_star\": 0.5"), "{text}");
}

#[test]
fn verify_sweep_passes_and_run_config_matches_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let by_flags = tmp.path().join("flags");
    let out = run(&[
        "verify",
        "--lemma", "scalar_cubic",
        "--cases", "500",
        "--seed", "2",
        "--out", by_flags.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let by_config = tmp.path().join("config");
    let config = serde_json::json!({
        "command": "verify",
        "lemma": "scalar_cubic",
        "cases": 500,
        "seed": 2,
        "out": by_config,
    });
    let config_path = tmp.path().join("config.json");
    std::fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = run(&["run", "--config", config_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&by_flags, "verify.json"), read(&by_config, "verify.json"));
}

#[test]
fn verify_unknown_lemma_is_usage_error() {
    let out = run(&["verify", "--lemma", "nonsense", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_single_scenario() {
    let out = run(&["reproduce", "noerg"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("noerg") && text.contains("pass"), "{text}");
}
