//! Deterministic discrete-event simulator of post-quantum handshake
//! scheduling in an Open RAN control plane.
//!
//! Post-quantum handshakes are expensive — a full ML-KEM/ML-DSA
//! exchange costs roughly twenty times a resumed (PSK) one — and a
//! tactical scheduler at the RAN controller can exploit that gap:
//! preferring session resumption, pre-seeding resumption material ahead
//! of handovers, batching non-urgent work into short windows, and
//! offloading to accelerators, all under a safety shield that keeps
//! slice latency budgets intact.
//!
//! The crate models that control loop at desk scale:
//!
//! * [`domain`] — scenario schema, validation, and the closed-form
//!   energy model used as an oracle.
//! * [`workload`] — seeded Poisson security-event streams with
//!   mobility-dependent resumption and handover storms.
//! * [`scheduler`] — observations, the satisfy-then-optimize rule
//!   policy, and the safety shield.
//! * [`engine`] — the deterministic event loop and queue accounting.
//! * [`rlpolicy`] — constrained tabular Q-learning with action masking.
//! * [`metrics`] — percentiles, SLA compliance, CDFs, summaries.
//! * [`cli`] — the `sos-sim` binary's run/sweep/train commands.
//!
//! Start with the `examples/` directory: each example is a runnable
//! walkthrough of one capability (`cargo run --example case_study`).

pub mod cli;
pub mod domain;
pub mod engine;
pub mod metrics;
pub mod rlpolicy;
pub mod scheduler;
pub mod workload;

pub use domain::{
    expected_energy_mj, parse_scenario, relative_energy, resumption_for_savings, validate_scenario,
    CostModel, HandshakeKind, Scenario, SliceClass,
};
pub use engine::{run, run_events, CompletionRecord, EpisodeStats, RunOutput};
pub use metrics::{percentile, sla_compliance, summarize, ScenarioSummary};
pub use scheduler::{BaselinePolicy, Observation, Policy, RulePolicy, ScheduleDecision};
pub use workload::{generate_events, SecurityEvent, SimRng};
