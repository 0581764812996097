//! Batching windows and the safety shield. A handover storm hits midway
//! through the run: arrivals multiply, sessions break, and the shield
//! relaxes energy-driven deferral (StormRelax) while critical queue
//! residency suspends it outright (CongestionSafeMode). Also shows the
//! rekey-timer freeze that pushes scheduled rekeys out of the storm.
//!
//! Run with: cargo run --example batching_shield

use sos_sim::domain::parse_scenario;
use sos_sim::engine::{self, write_decision_csv};
use sos_sim::scheduler::{freeze_rekeys, Action, RekeyTimer, RulePolicy};
use std::fs;

fn main() {
    let scenario = parse_scenario(include_str!("../scenarios/handover-storm.json")).unwrap();
    let storm = scenario.mobility.storm.unwrap();
    println!(
        "{} O-RUs for {} s; storm at [{}, {}) s: arrivals x{}, resumption penalty {}",
        scenario.n_orus,
        scenario.horizon_s,
        storm.start_s,
        storm.start_s + storm.duration_s,
        storm.arrival_multiplier,
        storm.resumption_penalty
    );

    let mut policy = RulePolicy::new(&scenario);
    let out = engine::run(&scenario, &mut policy, scenario.seed).unwrap();
    let s = &out.stats;
    println!("\n{} events: {} full, {} resumed", s.n_events, s.n_full, s.n_resumed);
    println!(
        "decisions: {} deferred to batching windows, {} immediate",
        s.n_deferred,
        s.n_events - s.n_deferred
    );
    println!(
        "shield: {} StormRelax tags, {} CongestionSafeMode tags",
        s.n_storm_relax, s.n_congestion_safe
    );
    println!(
        "SLA: {} violations total, {} attributable to deferral",
        s.n_sla_violations, s.deferral_sla_violations
    );

    // Deferral never survives a shield condition.
    let bad = out
        .decisions
        .iter()
        .filter(|d| {
            (d.shield.storm_relax || d.shield.congestion_safe_mode)
                && matches!(d.action, Action::DeferToWindow { .. })
        })
        .count();
    println!("deferrals emitted under an active shield condition: {bad}");

    // Rekey timers scheduled inside the storm window shift to its end,
    // unless their safety deadline comes first.
    let (storm_start, storm_end) = storm.window_ms();
    let timers: Vec<RekeyTimer> = (0..6)
        .map(|i| {
            let fire = storm_start - 600_000.0 + i as f64 * 300_000.0;
            RekeyTimer { fire_at_ms: fire, deadline_ms: fire + 360_000.0 }
        })
        .collect();
    let frozen = freeze_rekeys(&timers, Some((storm_start, storm_end)));
    println!("\nrekey freeze across the storm window:");
    for (before, after) in timers.iter().zip(frozen.iter()) {
        let moved = if before.fire_at_ms != after.fire_at_ms { " <- shifted" } else { "" };
        println!(
            "  fire {:>9.0} ms (deadline {:>9.0}) -> {:>9.0} ms{moved}",
            before.fire_at_ms, before.deadline_ms, after.fire_at_ms
        );
    }

    let out_dir = std::path::Path::new("target/examples/batching_shield");
    fs::create_dir_all(out_dir).unwrap();
    let mut buf = Vec::new();
    write_decision_csv(&mut buf, &out.decisions).unwrap();
    let path = out_dir.join("decisions.csv");
    fs::write(&path, buf).unwrap();
    println!("\ndecision trace -> {}", path.display());
}
