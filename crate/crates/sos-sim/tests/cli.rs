//! Integration tests for the command-line entry points: exit codes,
//! output artifacts, manifests, and reproducibility.

use sos_sim::cli::{cmd_run, cmd_sweep, cmd_train, RunArgs, SweepArgs, TrainArgs};
use std::fs;
use std::path::{Path, PathBuf};

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// A scaled-down urban profile that runs in well under a second.
fn small_scenario(dir: &Path) -> PathBuf {
    write_scenario(
        dir,
        "small.json",
        r#"{
            "n_orus": 20,
            "horizon_s": 7200,
            "arrival_rate_per_oru_per_hour": 90,
            "mobility": {"name": "urban", "resumption_prob": 0.63,
                         "handover_rate_per_hour": 90},
            "seed": 7
        }"#,
    )
}

#[test]
fn run_writes_all_declared_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("out");
    let code = cmd_run(&RunArgs {
        scenario,
        policy: "rule".into(),
        seed: None,
        out: out.clone(),
        trace: true,
        full_cdf: false,
    });
    assert_eq!(code, 0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 4);
    for name in outputs {
        let path = out.join(name.as_str().unwrap());
        let meta = fs::metadata(&path).unwrap();
        assert!(meta.len() > 0, "{} is empty", path.display());
    }
    assert!(manifest["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(manifest["seed"].as_u64().unwrap(), 7);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["relative_energy"].as_f64().unwrap() < 0.45);
    // 20 O-RUs x 90/h x 2 h = 3,600 expected events.
    assert!(summary["n_events"].as_u64().unwrap() > 3_000);
}

#[test]
fn run_baseline_has_unit_relative_energy() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("out");
    let code = cmd_run(&RunArgs {
        scenario,
        policy: "baseline".into(),
        seed: None,
        out: out.clone(),
        trace: false,
        full_cdf: false,
    });
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["relative_energy"].as_f64().unwrap(), 1.0);
    assert_eq!(summary["n_resumed"].as_u64().unwrap(), 0);
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_scenario(dir.path(), "bad.json", r#"{"n_oru": 10}"#);
    let code = cmd_run(&RunArgs {
        scenario: bad,
        policy: "rule".into(),
        seed: None,
        out: dir.path().join("out"),
        trace: false,
        full_cdf: false,
    });
    assert_eq!(code, 2);

    let missing = dir.path().join("nope.json");
    let code = cmd_run(&RunArgs {
        scenario: missing,
        policy: "rule".into(),
        seed: None,
        out: dir.path().join("out"),
        trace: false,
        full_cdf: false,
    });
    assert_eq!(code, 2);
}

#[test]
fn unknown_policy_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let code = cmd_run(&RunArgs {
        scenario,
        policy: "greedy".into(),
        seed: None,
        out: dir.path().join("out"),
        trace: false,
        full_cdf: false,
    });
    assert_eq!(code, 2);
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let code = cmd_run(&RunArgs {
            scenario: scenario.clone(),
            policy: "rule".into(),
            seed: Some(99),
            out: out.clone(),
            trace: true,
            full_cdf: true,
        });
        assert_eq!(code, 0);
    }
    for file in ["summary.json", "cdf.csv", "records.csv", "decisions.csv"] {
        assert_eq!(
            fs::read(out_a.join(file)).unwrap(),
            fs::read(out_b.join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn sweep_reproduces_the_energy_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("sweep");
    let code = cmd_sweep(&SweepArgs {
        scenario,
        resume_rates: vec![0.0, 0.40, 0.63],
        seeds: vec![7],
        out: out.clone(),
    });
    assert_eq!(code, 0);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "scenario,p_resume,relative_energy,p95_ms,sla_compliance");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let rel: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((rel[0] - 1.0).abs() < 1e-12);
    assert!((rel[1] - 0.62).abs() < 0.02);
    assert!((rel[2] - 0.40).abs() < 0.02);
}

#[test]
fn sweep_at_full_resumption_hits_the_cost_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("sweep");
    let code = cmd_sweep(&SweepArgs {
        scenario,
        resume_rates: vec![0.40, 1.0],
        seeds: vec![],
        out: out.clone(),
    });
    assert_eq!(code, 0);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let second = table.lines().nth(2).unwrap();
    let fields: Vec<&str> = second.split(',').collect();
    let rel: f64 = fields[2].parse().unwrap();
    // At p = 1 every event resumes, so relative energy is resumed/full.
    assert!((rel - 0.88 / 17.57).abs() < 1e-9, "relative {rel}");
}

#[test]
fn sweep_rejects_empty_or_invalid_rates() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let code = cmd_sweep(&SweepArgs {
        scenario: scenario.clone(),
        resume_rates: vec![],
        seeds: vec![],
        out: dir.path().join("out"),
    });
    assert_eq!(code, 2);
    let code = cmd_sweep(&SweepArgs {
        scenario,
        resume_rates: vec![0.5, 1.5],
        seeds: vec![],
        out: dir.path().join("out"),
    });
    assert_eq!(code, 2);
}

#[test]
fn sweep_honors_thread_cap_env() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    std::env::set_var(sos_sim::cli::THREADS_ENV, "1");
    let code = cmd_sweep(&SweepArgs {
        scenario,
        resume_rates: vec![0.0, 0.63],
        seeds: vec![1, 2],
        out: dir.path().join("out"),
    });
    std::env::remove_var(sos_sim::cli::THREADS_ENV);
    assert_eq!(code, 0);
    let table = fs::read_to_string(dir.path().join("out").join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5); // header + 2 rates x 2 seeds
}

#[test]
fn train_writes_full_checkpoint_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        dir.path(),
        "train.json",
        r#"{
            "n_orus": 10,
            "horizon_s": 1800,
            "arrival_rate_per_oru_per_hour": 90,
            "mobility": {"name": "urban", "resumption_prob": 0.63,
                         "handover_rate_per_hour": 90},
            "batching": {"window_ms": 50, "safety_margin_frac": 0.8, "enabled": true},
            "seed": 3
        }"#,
    );
    let out = dir.path().join("train");
    let code = cmd_train(&TrainArgs {
        scenario: scenario.clone(),
        episodes: 2,
        seed: None,
        out: out.clone(),
    });
    assert_eq!(code, 0);

    let entries: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("checkpoint.json")).unwrap()).unwrap();
    assert_eq!(entries.as_array().unwrap().len(), 48 * 3);
    let curve = fs::read_to_string(out.join("training_curve.csv")).unwrap();
    assert!(curve.starts_with("episode,mean_energy_mJ,sla_compliance,epsilon\n"));
    assert_eq!(curve.lines().count(), 3);

    // The written checkpoint loads back as a runnable policy.
    let rl_out = dir.path().join("rl-run");
    let code = cmd_run(&RunArgs {
        scenario,
        policy: format!("rl:{}", out.join("checkpoint.json").display()),
        seed: Some(4),
        out: rl_out.clone(),
        trace: false,
        full_cdf: false,
    });
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(rl_out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["relative_energy"].as_f64().unwrap() < 0.5);
}

#[test]
fn train_rejects_zero_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let code = cmd_train(&TrainArgs {
        scenario,
        episodes: 0,
        seed: None,
        out: dir.path().join("out"),
    });
    assert_eq!(code, 2);
}
