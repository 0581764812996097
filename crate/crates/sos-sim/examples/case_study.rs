//! The urban macro-cell case study end to end: 100 O-RUs, 24 hours,
//! 90 handshakes per O-RU-hour on a single shared tunnel terminator.
//! Three resumption regimes are compared — no resumption (legacy
//! behavior), 40% (highway mobility), and 63% (urban vehicular) — on
//! mean energy, relative energy, p95 latency, and SLA compliance.
//!
//! Run with: cargo run --release --example case_study

use sos_sim::domain::parse_scenario;
use sos_sim::engine;
use sos_sim::metrics::summarize;
use sos_sim::scheduler::RulePolicy;

fn main() {
    let text = include_str!("../scenarios/urban-macro.json");
    let base = parse_scenario(text).unwrap();
    println!(
        "urban-macro: {} O-RUs, {} h horizon, {}/h per O-RU, SLA {} ms, seed {}",
        base.n_orus,
        base.horizon_s / 3600.0,
        base.arrival_rate_per_oru_per_hour,
        base.sla_ms,
        base.seed
    );

    println!(
        "\n{:<12} {:>9} {:>10} {:>9} {:>10} {:>11}",
        "profile", "p_resume", "mean mJ", "relative", "p95 ms", "compliance"
    );
    for (name, p) in [("legacy", 0.0), ("highway", 0.40), ("urban", 0.63)] {
        let mut sc = base.clone();
        sc.mobility.resumption_prob = p;
        let mut policy = RulePolicy::new(&sc);
        let out = engine::run(&sc, &mut policy, sc.seed).unwrap();
        let s = summarize(&out.records, &sc).unwrap();
        println!(
            "{:<12} {:>9.2} {:>10.3} {:>9.3} {:>10.2} {:>11.4}",
            name, p, s.mean_energy_mj, s.relative_energy, s.p95_ms, s.sla_compliance_frac
        );
    }

    println!(
        "\nhigher resumption cuts energy and tail latency together: resumed \
         handshakes are both cheaper and faster, so there is no trade-off \
         between the two objectives."
    );
}
