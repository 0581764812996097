//! The closed-form energy model: expected energy per handshake as a
//! function of the session-resumption probability, its normalized form,
//! and the inverse mapping from a savings target back to the resumption
//! rate a deployment would need.
//!
//! Run with: cargo run --example analytic_model

use sos_sim::domain::{expected_energy_mj, relative_energy, resumption_for_savings, CostModel};

fn main() {
    let cost = CostModel::default();
    println!(
        "cost model: full {} mJ / {} ms, resumed {} mJ / {} ms (ratio {:.4})",
        cost.full_energy_mj,
        cost.full_time_ms,
        cost.resumed_energy_mj,
        cost.resumed_time_ms,
        cost.resumed_energy_ratio()
    );

    println!("\np_resume  mean mJ   relative");
    for p in [0.0, 0.2, 0.40, 0.63, 0.8, 1.0] {
        let mean = expected_energy_mj(&cost, p).unwrap();
        let rel = relative_energy(&cost, p).unwrap();
        println!("{p:>8.2}  {mean:>7.3}  {rel:>8.3}");
    }

    // Mobility sensitivity: the resumption rate required for a savings
    // target. Highway mobility caps achievable resumption near 40%,
    // stationary deployments reach ~89%.
    println!("\nsavings target -> required resumption probability");
    for savings in [0.0, 0.38, 0.60, 0.85] {
        let p = resumption_for_savings(&cost, savings).unwrap();
        println!("{:>6.0}%          -> p = {p:.4}", savings * 100.0);
    }

    let max = 1.0 - cost.resumed_energy_ratio();
    println!(
        "\nmaximum reachable savings for this cost model: {:.2}% (at p = 1)",
        max * 100.0
    );
    match resumption_for_savings(&cost, 0.99) {
        Err(e) => println!("asking for 99% savings fails as expected: {e}"),
        Ok(_) => unreachable!(),
    }
}
