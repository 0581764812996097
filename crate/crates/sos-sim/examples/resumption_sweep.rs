//! Resumption sweep: relative energy and p95 latency across the whole
//! resumption range, the data behind an energy-latency bar/line figure.
//! Writes the sweep table CSV.
//!
//! Run with: cargo run --example resumption_sweep

use sos_sim::domain::parse_scenario;
use sos_sim::engine;
use sos_sim::metrics::{summarize, write_sweep_csv, SweepRow};
use sos_sim::scheduler::RulePolicy;
use std::fs;

fn main() {
    let mut scenario = parse_scenario(include_str!("../scenarios/urban-macro.json")).unwrap();
    scenario.horizon_s = 14_400.0; // 4 h per point keeps the sweep quick

    println!("p_resume  relative_energy  p95_ms  compliance");
    let mut rows = Vec::new();
    for step in 0..=10 {
        let p = step as f64 / 10.0;
        let mut sc = scenario.clone();
        sc.mobility.resumption_prob = p;
        let mut policy = RulePolicy::new(&sc);
        let out = engine::run(&sc, &mut policy, sc.seed).unwrap();
        let s = summarize(&out.records, &sc).unwrap();
        println!(
            "{p:>8.1}  {:>15.3}  {:>6.2}  {:>10.4}",
            s.relative_energy, s.p95_ms, s.sla_compliance_frac
        );
        rows.push(SweepRow {
            scenario: "urban-macro-4h".into(),
            p_resume: p,
            relative_energy: s.relative_energy,
            p95_ms: s.p95_ms,
            sla_compliance: s.sla_compliance_frac,
        });
    }

    let out_dir = std::path::Path::new("target/examples/resumption_sweep");
    fs::create_dir_all(out_dir).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows).unwrap();
    let path = out_dir.join("sweep.csv");
    fs::write(&path, buf).unwrap();
    println!(
        "\nsweep table -> {} (bars: relative_energy, line: p95_ms)",
        path.display()
    );
    println!("the CLI equivalent: sos-sim sweep --scenario ... --resume-rates 0,0.4,0.63 --out ...");
}
