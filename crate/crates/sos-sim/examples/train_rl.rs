//! Constrained Q-learning demo: trains the tabular policy on a scenario
//! where all three actions (immediate, defer, offload) are live, then
//! compares the frozen policy against the baseline and rule policies on
//! a held-out seed. The action mask keeps every decision inside the
//! safety envelope throughout training.
//!
//! Run with: cargo run --example train_rl

use sos_sim::domain::{parse_scenario, AccelConfig};
use sos_sim::engine;
use sos_sim::rlpolicy::{train, write_checkpoint, write_curve_csv, Hyper};
use sos_sim::scheduler::{BaselinePolicy, RulePolicy};
use std::fs;

fn main() {
    let mut scenario = parse_scenario(include_str!("../scenarios/urban-macro.json")).unwrap();
    scenario.n_orus = 20;
    scenario.horizon_s = 3600.0;
    scenario.batching.enabled = true;
    scenario.accelerator =
        Some(AccelConfig { speedup: 4.0, per_op_overhead_mj: 1.0, queue_depth_cap: 2 });

    let episodes = 10;
    let hyper = Hyper::default();
    println!(
        "training {episodes} episodes (alpha {}, gamma {}, epsilon {} -> {})",
        hyper.alpha, hyper.gamma, hyper.epsilon_start, hyper.epsilon_min
    );
    let result = train(&scenario, episodes, &hyper, scenario.seed).unwrap();
    assert_eq!(result.mask_violations, 0);

    println!("\nepisode  mean mJ  compliance  epsilon");
    for p in &result.curve {
        println!(
            "{:>7}  {:>7.3}  {:>10.4}  {:>7.3}",
            p.episode, p.mean_energy_mj, p.sla_compliance, p.epsilon
        );
    }

    let holdout = scenario.seed.wrapping_add(1000);
    let mut frozen = result.policy;
    let rl = engine::run(&scenario, &mut frozen, holdout).unwrap();
    let base = engine::run(&scenario, &mut BaselinePolicy, holdout).unwrap();
    let mut rule = RulePolicy::new(&scenario);
    let rule_out = engine::run(&scenario, &mut rule, holdout).unwrap();

    println!("\nheld-out seed {holdout}:");
    println!(
        "  baseline  {:>7.3} mJ  (p95 {:>6.2} ms)",
        base.stats.mean_energy_mj,
        percentile_p95(&base)
    );
    println!(
        "  rule      {:>7.3} mJ  (p95 {:>6.2} ms, {} deferred, {} offloaded)",
        rule_out.stats.mean_energy_mj,
        percentile_p95(&rule_out),
        rule_out.stats.n_deferred,
        rule_out.stats.n_offloaded
    );
    println!(
        "  rl        {:>7.3} mJ  (p95 {:>6.2} ms, {} deferred, {} offloaded)",
        rl.stats.mean_energy_mj,
        percentile_p95(&rl),
        rl.stats.n_deferred,
        rl.stats.n_offloaded
    );
    println!(
        "  energy ratio rl/baseline = {:.3}",
        rl.stats.mean_energy_mj / base.stats.mean_energy_mj
    );

    let out_dir = std::path::Path::new("target/examples/train_rl");
    fs::create_dir_all(out_dir).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &frozen.q).unwrap();
    fs::write(out_dir.join("checkpoint.json"), buf).unwrap();
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &result.curve).unwrap();
    fs::write(out_dir.join("training_curve.csv"), buf).unwrap();
    println!("\ncheckpoint and training curve -> {}", out_dir.display());
}

fn percentile_p95(out: &engine::RunOutput) -> f64 {
    let latencies: Vec<f64> = out.records.iter().map(|r| r.latency_ms()).collect();
    sos_sim::metrics::percentile(&latencies, 0.95).unwrap()
}
