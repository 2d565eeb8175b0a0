mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn headprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_headprune"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, value: serde_json::Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path.display().to_string()
}

fn heavy_config(out: &str) -> serde_json::Value {
    json!({
        "budget": 1.0,
        "out": out,
        "oracle": {"additive": {"baseline": 92.46, "heavy_tailed": {"geometry": [6, 6], "nonpositive": 8, "seed": 3}}},
        "model_dims": {"hidden": 768, "heads": 12, "total_params": 110000000}
    })
}

#[test]
fn prune_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), heavy_config("run"));
    let out = headprune(&["prune", "astar", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    for f in [
        "report.json",
        "trace.csv",
        "mask.csv",
        "costs.csv",
        "manifest.json",
        "metadata.json",
    ] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let report = std::fs::read_to_string(run.join("report.json")).unwrap();
    let solution = headprune::PruneSolution::from_json(&report).unwrap();
    assert_eq!(solution.to_json().unwrap(), report);
    assert!(solution.budget.charged() < 1.0);

    let mask = std::fs::read_to_string(run.join("mask.csv")).unwrap();
    assert_eq!(mask.lines().count(), 6);
    assert_eq!(mask.matches("pruned").count(), solution.pruned.len());
}

#[test]
fn budget_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), heavy_config("run"));
    let out = headprune(&[
        "prune",
        "local",
        "--config",
        &cfg,
        "--budget",
        "0",
        "--out",
        dir.path().join("zero").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let m = headprune::harness::run::load_manifest(&dir.path().join("zero")).unwrap();
    assert_eq!(m.budget, Some(0.0));
    assert_eq!(m.solution.unwrap().budget_used, 0.0);
}

#[test]
fn config_errors_exit_2_and_list_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "budget": -1.0,
            "out": "run",
            "oracle": {
                "additive": {"baseline": 90.0, "weights": [[0.1]]},
                "supermodular": {"baseline": 90.0, "weights": [[0.1]], "growth": 0.0}
            }
        }),
    );
    let out = headprune(&["prune", "astar", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget"), "{err}");
    assert!(err.contains("oracle"), "{err}");
}

#[test]
fn random_without_budget_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = heavy_config("run");
    cfg["budget"] = serde_json::Value::Null;
    let cfg = write_config(dir.path(), cfg);
    let out = headprune(&["prune", "random", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table_miss_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("tiny.json");
    std::fs::write(
        &table,
        r#"{"baseline":90.0,"geometry":[1,2],"entries":[{"mask":[],"accuracy":90.0}]}"#,
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"budget": 1.0, "out": "run", "oracle": {"table": {"path": "tiny.json"}}}),
    );
    let out = headprune(&["prune", "astar", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no entry"));
    // The partial report is still written.
    assert!(dir.path().join("run/report.json").exists());
}

#[test]
fn record_then_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), heavy_config("live"));
    let out = headprune(&["record-table", "astar", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = dir.path().join("live/table.json");
    assert!(table.exists());

    let replay_dir = dir.path().join("replayed");
    let out = headprune(&[
        "replay",
        "astar",
        "--table",
        table.to_str().unwrap(),
        "--config",
        &cfg,
        "--out",
        replay_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "trace.csv", "mask.csv", "costs.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("live").join(f)).unwrap(),
            std::fs::read(replay_dir.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn random_writes_distribution_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), heavy_config("rand"));
    let out = headprune(&["prune", "random", "--config", &cfg, "--seed", "11", "--workers", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("rand");
    let dist = std::fs::read_to_string(run.join("distribution.csv")).unwrap();
    assert_eq!(dist.lines().count(), 101);
    let hist = std::fs::read_to_string(run.join("histogram.csv")).unwrap();
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 100);
    let budget_hist = std::fs::read_to_string(run.join("budget_histogram.csv")).unwrap();
    assert!(budget_hist.starts_with("lower,upper,count\n"));

    // Same seed, one worker: identical trials.
    let out = headprune(&[
        "prune",
        "random",
        "--config",
        &cfg,
        "--seed",
        "11",
        "--out",
        dir.path().join("rand1").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        dist,
        std::fs::read_to_string(dir.path().join("rand1/distribution.csv")).unwrap()
    );
}

#[test]
fn summarize_lists_each_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), heavy_config("unused"));
    let mut dirs = Vec::new();
    for (strategy, name) in [("astar", "a"), ("local", "l"), ("global", "g"), ("random", "r")] {
        let out_dir = dir.path().join(name);
        let out = headprune(&["prune", strategy, "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{strategy}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        dirs.push(out_dir.display().to_string());
    }
    let mut args = vec!["summarize"];
    args.extend(dirs.iter().map(String::as_str));
    let out = headprune(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("run,strategy,budget_given"));
    assert!(lines[1].contains(",astar,1,"));
    assert!(lines[4].contains(",random,1,"));
    // params_remaining is filled for the greedy runs.
    assert!(!lines[1].ends_with(','));
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let out = headprune(&["prune", "beam", "--config", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}
