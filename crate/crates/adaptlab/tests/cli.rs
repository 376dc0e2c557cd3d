//! End-to-end exercises of the command-line surface.

use std::path::Path;
use std::process::Command;

fn adaptlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptlab"))
}

#[test]
fn simulate_produces_a_run_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptlab()
        .args(["simulate", "fig3a", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["scenario"], "fig3a");
    assert!(summary["rmse_reduction"].as_f64().unwrap() > 0.6);
    let run_dir = dir.path().join("fig3a");
    for file in [
        "artifact.json",
        "trajectory.csv",
        "baseline.csv",
        "metrics.json",
        "region.json",
        "plot.svg",
        "config.toml",
    ] {
        assert!(run_dir.join(file).exists(), "missing {}", file);
    }
}

#[test]
fn simulate_accepts_config_files_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/fig3a.toml")
        .canonicalize()
        .unwrap();
    let out = adaptlab()
        .args(["simulate"])
        .arg(&config)
        .args(["--seed", "7", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let artifact: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig3a/artifact.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(artifact["config"]["seed"], 7);
}

#[test]
fn metrics_subcommand_reads_a_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sim = adaptlab()
        .args(["simulate", "fig3a", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(sim.status.success());
    let out = adaptlab()
        .arg("metrics")
        .arg(dir.path().join("fig3a/trajectory.csv"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["reference"]["peak_overshoot_pct"].is_number());
    assert!(doc["unknown"]["steady_state_error"].is_number());
}

#[test]
fn analyze_region_reports_the_published_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptlab()
        .args(["analyze-region", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c1 = doc["c1"].as_f64().unwrap();
    let threshold = doc["threshold"].as_f64().unwrap();
    assert!((c1 - 1.02).abs() <= 0.01, "c1 {}", c1);
    assert!((threshold - 15.0).abs() <= 0.2, "threshold {}", threshold);
    let map = std::fs::read_to_string(dir.path().join("region_map.csv")).unwrap();
    assert!(map.starts_with("e1,e2,status\n"));
    assert!(map.contains("converging"));
}

#[test]
fn design_with_rules_backend_runs_offline() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptlab()
        .args([
            "design",
            "design-fig3a",
            "--backend",
            "rules",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "converged");
    assert!(doc["iterations"].as_u64().unwrap() <= 10);
    assert!(dir.path().join("design-fig3a/session.json").exists());
}

#[test]
fn compare_suite_emits_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptlab()
        .args(["compare", "compare5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("compare5/comparison.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 10);
}

#[test]
fn rerun_reproduces_the_trajectory_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let first = adaptlab()
        .args(["simulate", "fig3e", "--out"])
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert!(first.status.success());
    let second = adaptlab()
        .arg("rerun")
        .arg(dir.path().join("a/fig3e"))
        .arg("--out")
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    let a = std::fs::read(dir.path().join("a/fig3e/trajectory.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/fig3e/trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_subcommand_exits_with_usage_code() {
    let out = adaptlab().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn runtime_errors_are_machine_readable_on_stderr() {
    let out = adaptlab()
        .args(["simulate", "no-such-preset-or-file"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"], "invalid_config");
    assert!(err["message"].as_str().unwrap().contains("unknown preset"));
}

#[test]
fn bad_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    let base = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig3a.toml"),
    )
    .unwrap();
    std::fs::write(&path, base.replace("horizon =", "horzon =")).unwrap();
    let out = adaptlab().arg("simulate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"], "toml");
}
