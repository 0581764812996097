//! Queueing validation: an all-full workload on a single deterministic
//! terminator is an M/D/1 queue, so the simulated mean waiting time
//! must match rho * S / (2 (1 - rho)). This is the independent oracle
//! behind the engine's waiting-time accounting.
//!
//! Run with: cargo run --example queueing_validation

use sos_sim::domain::{Scenario, Topology};
use sos_sim::engine;
use sos_sim::scheduler::BaselinePolicy;

fn main() {
    let service_ms = 98.48;
    println!("M/D/1 check, service {service_ms} ms, 200k events per point\n");
    println!("  rho   simulated wait   rho*S/(2(1-rho))   deviation");
    for rho in [0.1, 0.25, 0.5, 0.7] {
        let lambda_per_ms = rho / service_ms;
        let n_target = 200_000.0;
        let scenario = Scenario {
            n_orus: 1,
            horizon_s: n_target / lambda_per_ms / 1000.0,
            arrival_rate_per_oru_per_hour: lambda_per_ms * 3_600_000.0,
            topology: Topology::SharedTerminator { servers: 1 },
            ..Scenario::default()
        };
        // Baseline policy disables resumption: every event is a full
        // handshake with the deterministic 98.48 ms service time.
        let out = engine::run(&scenario, &mut BaselinePolicy, 42).unwrap();
        let mean_wait =
            out.records.iter().map(|r| r.wait_ms()).sum::<f64>() / out.records.len() as f64;
        let theory = rho * service_ms / (2.0 * (1.0 - rho));
        println!(
            "  {rho:<4}  {mean_wait:>10.3} ms   {theory:>12.3} ms   {:>8.2}%",
            (mean_wait / theory - 1.0) * 100.0
        );
    }
    println!("\nthe acceptance suite repeats this at 1e6 events with a 5% gate");
}
