//! Batch entry points behind the `sos-sim` binary: run one scenario,
//! sweep resumption rates across seeds, or train the tabular RL policy.
//!
//! Exit codes are part of the contract: 0 success, 2 configuration
//! error (bad file, bad flag, failed validation), 3 runtime failure
//! (engine invariant breach or output I/O).

use crate::domain::{parse_scenario, Scenario};
use crate::engine::{self, write_decision_csv, write_record_csv, RunOutput};
use crate::metrics::{
    self, cdf_points, write_cdf_csv, write_summary_json, write_sweep_csv, ScenarioSummary,
    SweepRow,
};
use crate::rlpolicy::{self, read_checkpoint, write_checkpoint, write_curve_csv, Hyper, RlPolicy};
use crate::scheduler::{BaselinePolicy, Policy, RulePolicy};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "SOS_SIM_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "sos-sim",
    version,
    about = "Deterministic discrete-event simulator for post-quantum handshake scheduling in an Open RAN control plane"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a single scenario and write summary, CDF, and manifest
    Run(RunArgs),
    /// Run the cross-product of resumption rates and seeds
    Sweep(SweepArgs),
    /// Train the tabular RL policy and write a checkpoint
    Train(TrainArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Scenario JSON file
    #[arg(long)]
    pub scenario: PathBuf,
    /// Scheduling policy: baseline | rule | rl:<checkpoint.json>
    #[arg(long, default_value = "rule")]
    pub policy: String,
    /// Seed override; defaults to the scenario's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Also write completion-record and decision traces
    #[arg(long)]
    pub trace: bool,
    /// Write the CDF at full resolution instead of thinned
    #[arg(long)]
    pub full_cdf: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Scenario JSON file
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated resumption probabilities in [0, 1]
    #[arg(long = "resume-rates", value_delimiter = ',', required = true)]
    pub resume_rates: Vec<f64>,
    /// Comma-separated seeds; defaults to the scenario's seed
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Scenario JSON file
    #[arg(long)]
    pub scenario: PathBuf,
    /// Training episodes
    #[arg(long, default_value_t = 30)]
    pub episodes: u32,
    /// Seed override; defaults to the scenario's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

pub fn dispatch(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Train(args) => cmd_train(args),
    }
}

/// A run manifest, written last on success. Wall-clock fields aside,
/// identical inputs produce identical artifacts; the digest ties the
/// outputs to the exact scenario bytes, seed, and policy.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    pub policy: String,
    pub version: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<String>,
    pub input_digest: String,
}

fn now_unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn input_digest(scenario_bytes: &[u8], seed: u64, policy: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(scenario_bytes);
    hasher.update(seed.to_le_bytes());
    hasher.update(policy.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(7 + digest.len() * 2);
    hex.push_str("sha256:");
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

fn load_scenario(path: &Path) -> Result<(Scenario, Vec<u8>), String> {
    let bytes =
        fs::read(path).map_err(|e| format!("cannot read scenario {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| format!("scenario {} is not UTF-8", path.display()))?;
    let scenario = parse_scenario(&text).map_err(|errors| {
        errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
    })?;
    Ok((scenario, bytes))
}

fn make_policy(spec: &str, scenario: &Scenario) -> Result<Box<dyn Policy>, String> {
    match spec {
        "baseline" => Ok(Box::new(BaselinePolicy)),
        "rule" => Ok(Box::new(RulePolicy::new(scenario))),
        other => match other.strip_prefix("rl:") {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read checkpoint {path}: {e}"))?;
                let q = read_checkpoint(&text)?;
                Ok(Box::new(RlPolicy::frozen(q, scenario)))
            }
            None => Err(format!(
                "unknown policy `{other}`: expected baseline, rule, or rl:<checkpoint>"
            )),
        },
    }
}

fn write_out(path: &Path, content: &[u8]) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

struct RunArtifacts {
    summary: ScenarioSummary,
    output: RunOutput,
}

fn execute_run(
    scenario: &Scenario,
    policy_spec: &str,
    seed: u64,
) -> Result<RunArtifacts, (i32, String)> {
    let mut policy =
        make_policy(policy_spec, scenario).map_err(|e| (EXIT_CONFIG, e))?;
    let output = engine::run(scenario, policy.as_mut(), seed)
        .map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    let summary = metrics::summarize(&output.records, scenario)
        .map_err(|_| (EXIT_CONFIG, "scenario produced no events".to_string()))?;
    Ok(RunArtifacts { summary, output })
}

/// `run`: simulate one scenario and write `summary.json`, `cdf.csv`,
/// optional traces, and `manifest.json`.
pub fn cmd_run(args: &RunArgs) -> i32 {
    let started = now_unix_ms();
    let (scenario, scenario_bytes) = match load_scenario(&args.scenario) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_CONFIG;
        }
    };
    let seed = args.seed.unwrap_or(scenario.seed);
    let artifacts = match execute_run(&scenario, &args.policy, seed) {
        Ok(a) => a,
        Err((code, msg)) => {
            eprintln!("{msg}");
            return code;
        }
    };

    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("cannot create {}: {e}", args.out.display());
        return EXIT_RUNTIME;
    }
    let mut outputs = Vec::new();
    let result = (|| -> Result<(), String> {
        let mut buf = Vec::new();
        write_summary_json(&mut buf, &artifacts.summary).map_err(|e| e.to_string())?;
        write_out(&args.out.join("summary.json"), &buf)?;
        outputs.push("summary.json".to_string());

        let latencies: Vec<f64> =
            artifacts.output.records.iter().map(|r| r.latency_ms()).collect();
        let points = cdf_points(&latencies).map_err(|e| e.to_string())?;
        let points = if args.full_cdf {
            points
        } else {
            metrics::downsample_cdf(&points, metrics::CDF_MAX_POINTS)
        };
        let mut buf = Vec::new();
        write_cdf_csv(&mut buf, &points).map_err(|e| e.to_string())?;
        write_out(&args.out.join("cdf.csv"), &buf)?;
        outputs.push("cdf.csv".to_string());

        if args.trace {
            let mut buf = Vec::new();
            write_record_csv(&mut buf, &artifacts.output.records).map_err(|e| e.to_string())?;
            write_out(&args.out.join("records.csv"), &buf)?;
            outputs.push("records.csv".to_string());

            let mut buf = Vec::new();
            write_decision_csv(&mut buf, &artifacts.output.decisions)
                .map_err(|e| e.to_string())?;
            write_out(&args.out.join("decisions.csv"), &buf)?;
            outputs.push("decisions.csv".to_string());
        }

        let manifest = RunManifest {
            scenario: args.scenario.display().to_string(),
            seed,
            policy: args.policy.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: started,
            finished_unix_ms: now_unix_ms(),
            outputs: outputs.clone(),
            input_digest: input_digest(&scenario_bytes, seed, &args.policy),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
        write_out(&args.out.join("manifest.json"), format!("{text}\n").as_bytes())?;
        Ok(())
    })();
    if let Err(msg) = result {
        eprintln!("{msg}");
        return EXIT_RUNTIME;
    }

    let s = &artifacts.summary;
    println!(
        "{}: policy={} seed={} events={} mean={:.3} mJ relative={:.3} p95={:.2} ms compliance={:.4}",
        args.scenario.display(),
        args.policy,
        seed,
        s.n_events,
        s.mean_energy_mj,
        s.relative_energy,
        s.p95_ms,
        s.sla_compliance_frac
    );
    EXIT_OK
}

fn worker_threads(jobs: usize) -> usize {
    let configured = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let available =
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    configured.unwrap_or(available).min(jobs.max(1))
}

/// `sweep`: run the cross-product of resumption rates and seeds with the
/// rule policy and write the sweep table (rate-major row order).
pub fn cmd_sweep(args: &SweepArgs) -> i32 {
    let started = now_unix_ms();
    let (scenario, scenario_bytes) = match load_scenario(&args.scenario) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_CONFIG;
        }
    };
    if args.resume_rates.is_empty() {
        eprintln!("--resume-rates must list at least one probability");
        return EXIT_CONFIG;
    }
    for &rate in &args.resume_rates {
        if !(0.0..=1.0).contains(&rate) {
            eprintln!("resume rate {rate} outside [0, 1]");
            return EXIT_CONFIG;
        }
    }
    let seeds = if args.seeds.is_empty() { vec![scenario.seed] } else { args.seeds.clone() };
    let stem = args
        .scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());

    let jobs: Vec<(f64, u64)> = args
        .resume_rates
        .iter()
        .flat_map(|&rate| seeds.iter().map(move |&seed| (rate, seed)))
        .collect();
    let results: Vec<Mutex<Option<Result<SweepRow, String>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let n_threads = worker_threads(jobs.len());

    std::thread::scope(|scope| {
        for _ in 0..n_threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let (rate, seed) = jobs[i];
                let mut sc = scenario.clone();
                sc.mobility.resumption_prob = rate;
                let row = execute_run(&sc, "rule", seed)
                    .map(|a| SweepRow {
                        scenario: stem.clone(),
                        p_resume: rate,
                        relative_energy: a.summary.relative_energy,
                        p95_ms: a.summary.p95_ms,
                        sla_compliance: a.summary.sla_compliance_frac,
                    })
                    .map_err(|(_, msg)| msg);
                *results[i].lock().unwrap() = Some(row);
            });
        }
    });

    let mut rows = Vec::with_capacity(jobs.len());
    for cell in results {
        match cell.into_inner().unwrap() {
            Some(Ok(row)) => rows.push(row),
            Some(Err(msg)) => {
                eprintln!("sweep run failed: {msg}");
                return EXIT_RUNTIME;
            }
            None => {
                eprintln!("sweep run never executed");
                return EXIT_RUNTIME;
            }
        }
    }

    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("cannot create {}: {e}", args.out.display());
        return EXIT_RUNTIME;
    }
    let result = (|| -> Result<(), String> {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).map_err(|e| e.to_string())?;
        write_out(&args.out.join("sweep.csv"), &buf)?;
        let policy_tag = format!(
            "rule@rates={:?};seeds={:?}",
            args.resume_rates, seeds
        );
        let manifest = RunManifest {
            scenario: args.scenario.display().to_string(),
            seed: seeds[0],
            policy: policy_tag.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: started,
            finished_unix_ms: now_unix_ms(),
            outputs: vec!["sweep.csv".to_string()],
            input_digest: input_digest(&scenario_bytes, seeds[0], &policy_tag),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
        write_out(&args.out.join("manifest.json"), format!("{text}\n").as_bytes())?;
        Ok(())
    })();
    if let Err(msg) = result {
        eprintln!("{msg}");
        return EXIT_RUNTIME;
    }

    for row in &rows {
        println!(
            "p_resume={:.2} relative_energy={:.3} p95={:.2} ms compliance={:.4}",
            row.p_resume, row.relative_energy, row.p95_ms, row.sla_compliance
        );
    }
    EXIT_OK
}

/// `train`: run tabular Q-learning over the scenario, write the
/// checkpoint and training curve, and report a held-out comparison
/// against the baseline policy.
pub fn cmd_train(args: &TrainArgs) -> i32 {
    let started = now_unix_ms();
    let (scenario, scenario_bytes) = match load_scenario(&args.scenario) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_CONFIG;
        }
    };
    if args.episodes < 1 {
        eprintln!("--episodes must be at least 1");
        return EXIT_CONFIG;
    }
    let seed = args.seed.unwrap_or(scenario.seed);
    let hyper = Hyper::default();
    let trained = match rlpolicy::train(&scenario, args.episodes, &hyper, seed) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_RUNTIME;
        }
    };
    if trained.mask_violations > 0 {
        eprintln!("mask audit failed: {} masked actions emitted", trained.mask_violations);
        return EXIT_RUNTIME;
    }

    // Held-out comparison on a seed never used during training.
    let holdout_seed = seed.wrapping_add(1000);
    let mut frozen = trained.policy;
    let rl_out = match engine::run(&scenario, &mut frozen, holdout_seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_RUNTIME;
        }
    };
    let mut baseline = BaselinePolicy;
    let base_out = match engine::run(&scenario, &mut baseline, holdout_seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_RUNTIME;
        }
    };

    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("cannot create {}: {e}", args.out.display());
        return EXIT_RUNTIME;
    }
    let policy_tag = format!("train@episodes={}", args.episodes);
    let result = (|| -> Result<(), String> {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &frozen.q).map_err(|e| e.to_string())?;
        write_out(&args.out.join("checkpoint.json"), &buf)?;

        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &trained.curve).map_err(|e| e.to_string())?;
        write_out(&args.out.join("training_curve.csv"), &buf)?;

        let manifest = RunManifest {
            scenario: args.scenario.display().to_string(),
            seed,
            policy: policy_tag.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: started,
            finished_unix_ms: now_unix_ms(),
            outputs: vec!["checkpoint.json".to_string(), "training_curve.csv".to_string()],
            input_digest: input_digest(&scenario_bytes, seed, &policy_tag),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
        write_out(&args.out.join("manifest.json"), format!("{text}\n").as_bytes())?;
        Ok(())
    })();
    if let Err(msg) = result {
        eprintln!("{msg}");
        return EXIT_RUNTIME;
    }

    let ratio = rl_out.stats.mean_energy_mj / base_out.stats.mean_energy_mj;
    println!(
        "trained {} episodes; held-out seed {}: rl mean {:.3} mJ, baseline mean {:.3} mJ, energy ratio {:.3}",
        args.episodes,
        holdout_seed,
        rl_out.stats.mean_energy_mj,
        base_out.stats.mean_energy_mj,
        ratio
    );
    EXIT_OK
}
