//! Tactical scheduling logic: observation building, the
//! satisfy-then-optimize rule policy (URLLC bypass, headroom-gated
//! batching, resumption preference, pre-seeding, rekey freezing,
//! accelerator admission), and the safety shield that wraps every
//! decision.

use crate::domain::{
    AccelConfig, BatchConfig, CostModel, HandshakeKind, MobilityProfile, Scenario, ShieldConfig,
    SliceClass,
};
use crate::workload::SecurityEvent;
use std::fmt;

/// Default cell-load ceiling below which batching windows open.
pub const DEFAULT_LOAD_GATE: f64 = 0.5;

/// The per-decision view the scheduler observes: latency headroom,
/// endpoint load, mobility pressure, and an energy proxy for the
/// pending operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub headroom_ms: f64,
    pub cell_load: f64,
    /// Mobility events per second over the last control cycle.
    pub mobility_rate: f64,
    pub energy_proxy_mj: f64,
    pub queue_residency_ms: f64,
    pub in_storm: bool,
}

/// Builds the observation for one pending event.
///
/// Headroom is the SLA budget minus the estimated completion time
/// (queue residency plus expected service); negative headroom is
/// meaningful and preserved.
pub fn build_observation(
    queue_residency_ms: f64,
    expected_service_ms: f64,
    energy_proxy_mj: f64,
    cell_load: f64,
    mobility_rate: f64,
    in_storm: bool,
    sla_ms: f64,
) -> Observation {
    Observation {
        headroom_ms: sla_ms - (queue_residency_ms + expected_service_ms),
        cell_load: cell_load.clamp(0.0, 1.0),
        mobility_rate,
        energy_proxy_mj,
        queue_residency_ms,
        in_storm,
    }
}

/// What happens to the pending handshake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Immediate,
    DeferToWindow { window_start_ms: f64 },
    Offload,
}

impl Action {
    pub fn label(&self) -> &'static str {
        match self {
            Action::Immediate => "immediate",
            Action::DeferToWindow { .. } => "defer",
            Action::Offload => "offload",
        }
    }
}

/// Shield annotations carried on a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShieldFlags {
    pub urllc_bypass: bool,
    pub storm_relax: bool,
    pub congestion_safe_mode: bool,
}

impl ShieldFlags {
    pub fn is_empty(&self) -> bool {
        !(self.urllc_bypass || self.storm_relax || self.congestion_safe_mode)
    }
}

impl fmt::Display for ShieldFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.urllc_bypass {
            parts.push("UrllcBypass");
        }
        if self.storm_relax {
            parts.push("StormRelax");
        }
        if self.congestion_safe_mode {
            parts.push("CongestionSafeMode");
        }
        write!(f, "{}", parts.join("|"))
    }
}

/// A tactical intent for one security event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleDecision {
    pub action: Action,
    pub prefer_resume: bool,
    pub shield: ShieldFlags,
}

impl ScheduleDecision {
    pub fn immediate() -> Self {
        ScheduleDecision {
            action: Action::Immediate,
            prefer_resume: false,
            shield: ShieldFlags::default(),
        }
    }
}

/// Start of the next batching window: the smallest multiple of
/// `window_ms` strictly greater than `now_ms`.
pub fn next_window_ms(now_ms: f64, window_ms: f64) -> f64 {
    ((now_ms / window_ms).floor() + 1.0) * window_ms
}

/// Pre-seeding state: resumption material pushed to likely handover
/// targets raises the effective resumption probability by an uplift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResumptionCache {
    /// Probability uplift contributed per predicted target terminator.
    pub uplift_per_target: f64,
    /// Number of predicted target terminators holding seeded material.
    pub preseed_horizon: u32,
}

/// Uplift the cache contributes on top of the profile's base
/// resumption probability, clamped so the effective probability stays
/// in [0, 1]. Monotonically non-decreasing in the pre-seed horizon.
pub fn preseed_uplift(cache: &ResumptionCache, mobility: &MobilityProfile) -> f64 {
    let raw = cache.uplift_per_target.max(0.0) * cache.preseed_horizon as f64;
    raw.clamp(0.0, 1.0 - mobility.resumption_prob)
}

/// A scheduled rekey with a latest-allowed firing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RekeyTimer {
    pub fire_at_ms: f64,
    pub deadline_ms: f64,
}

/// Freezes rekey timers during a handover storm: timers that would fire
/// inside the storm window shift to the storm's end, but never past
/// their safety deadline. No storm leaves timers untouched.
pub fn freeze_rekeys(timers: &[RekeyTimer], storm_window_ms: Option<(f64, f64)>) -> Vec<RekeyTimer> {
    match storm_window_ms {
        None => timers.to_vec(),
        Some((start, end)) => timers
            .iter()
            .map(|t| {
                if t.fire_at_ms >= start && t.fire_at_ms < end {
                    RekeyTimer { fire_at_ms: end.min(t.deadline_ms), ..*t }
                } else {
                    *t
                }
            })
            .collect(),
    }
}

/// Accelerator occupancy as seen at decision time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSnapshot {
    pub residency_ms: f64,
    pub depth: usize,
    pub cfg: AccelConfig,
}

/// Offload admission: the accelerated completion must fit the slice
/// budget, the energy model must predict a net gain over software
/// execution (time-proportional energy minus the offload overhead),
/// and the queue-depth cap must not be reached.
pub fn accelerator_admit(
    energy_proxy_mj: f64,
    expected_service_ms: f64,
    accel: &AccelSnapshot,
    sla_ms: f64,
) -> bool {
    let latency_ok = accel.residency_ms + expected_service_ms / accel.cfg.speedup <= sla_ms;
    let energy_saved = energy_proxy_mj * (1.0 - 1.0 / accel.cfg.speedup);
    let net_gain = accel.cfg.per_op_overhead_mj < energy_saved;
    let depth_ok = accel.depth < accel.cfg.queue_depth_cap as usize;
    latency_ok && net_gain && depth_ok
}

/// Tracks work already committed to the upcoming batching window so the
/// deferral gate accounts for it. Stale windows reset automatically.
#[derive(Debug, Clone, Default)]
pub struct BatchLedger {
    window_start_ms: f64,
    pending_ms: f64,
}

impl BatchLedger {
    pub fn pending_for(&mut self, window_start_ms: f64) -> f64 {
        if self.window_start_ms != window_start_ms {
            self.window_start_ms = window_start_ms;
            self.pending_ms = 0.0;
        }
        self.pending_ms
    }

    pub fn commit(&mut self, window_start_ms: f64, service_ms: f64) {
        let pending = self.pending_for(window_start_ms);
        self.pending_ms = pending + service_ms;
    }
}

/// The deferral gate. Returns the window start when deferring the event
/// is allowed:
///
/// * batching is enabled and the window is open (cell load below the gate),
/// * the estimated completion measured from the window start — current
///   residency, plus work already batched into that window, plus this
///   event's service — stays within the safety-margin fraction of the
///   SLA, and
/// * the completion measured from arrival (including the deferral delay)
///   stays within the SLA itself.
pub fn defer_window(
    obs: &Observation,
    now_ms: f64,
    expected_service_ms: f64,
    batching: &BatchConfig,
    load_gate: f64,
    ledger: &mut BatchLedger,
    sla_ms: f64,
) -> Option<f64> {
    if !batching.enabled || obs.cell_load >= load_gate {
        return None;
    }
    let window = next_window_ms(now_ms, batching.window_ms);
    let delay = window - now_ms;
    let from_window =
        obs.queue_residency_ms + ledger.pending_for(window) + expected_service_ms;
    if from_window <= batching.safety_margin_frac * sla_ms && delay + from_window <= sla_ms {
        Some(window)
    } else {
        None
    }
}

/// Configuration for the rule policy, derived from a scenario.
#[derive(Debug, Clone)]
pub struct RuleConfig {
    pub batching: BatchConfig,
    pub sla_ms: f64,
    pub cost: CostModel,
    pub load_gate: f64,
    pub preseed: Option<ResumptionCache>,
}

impl RuleConfig {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        RuleConfig {
            batching: scenario.batching,
            sla_ms: scenario.sla_ms,
            cost: scenario.cost_model,
            load_gate: DEFAULT_LOAD_GATE,
            preseed: None,
        }
    }
}

/// The satisfy-then-optimize decision rule:
///
/// 1. URLLC bypasses scheduling outright (resumption only rides along
///    when the event already holds a valid context).
/// 2. Resumed handshakes run immediately; they are already the cheap path.
/// 3. Full eMBB handshakes defer to the next batching window when the
///    headroom gate allows it.
/// 4. Otherwise the handshake runs immediately,
/// 5. via the accelerator when admission passes.
pub fn rule_decide(
    obs: &Observation,
    event: &SecurityEvent,
    cfg: &RuleConfig,
    ledger: &mut BatchLedger,
    accel: Option<&AccelSnapshot>,
) -> ScheduleDecision {
    let prefer_resume = event.kind == HandshakeKind::Resumed;
    if event.slice == SliceClass::Urllc {
        return ScheduleDecision {
            action: Action::Immediate,
            prefer_resume,
            shield: ShieldFlags { urllc_bypass: true, ..ShieldFlags::default() },
        };
    }
    if prefer_resume {
        return ScheduleDecision {
            action: Action::Immediate,
            prefer_resume: true,
            shield: ShieldFlags::default(),
        };
    }
    let service = cfg.cost.full_time_ms;
    if let Some(window) = defer_window(
        obs,
        event.arrival_ms,
        service,
        &cfg.batching,
        cfg.load_gate,
        ledger,
        cfg.sla_ms,
    ) {
        ledger.commit(window, service);
        return ScheduleDecision {
            action: Action::DeferToWindow { window_start_ms: window },
            prefer_resume: false,
            shield: ShieldFlags::default(),
        };
    }
    if let Some(snapshot) = accel {
        if accelerator_admit(obs.energy_proxy_mj, service, snapshot, cfg.sla_ms) {
            return ScheduleDecision {
                action: Action::Offload,
                prefer_resume: false,
                shield: ShieldFlags::default(),
            };
        }
    }
    ScheduleDecision { action: Action::Immediate, prefer_resume: false, shield: ShieldFlags::default() }
}

/// The safety shield. Under a storm (flagged or detected from mobility
/// counters) energy-driven deferral is relaxed back to immediate
/// execution; under critical queue residency any deferral or offload is
/// rewritten to immediate. Idempotent.
pub fn shield(
    decision: ScheduleDecision,
    obs: &Observation,
    cfg: &ShieldConfig,
    rolling_mean_rate_per_s: f64,
) -> ScheduleDecision {
    let mut d = decision;
    // Sub-event rolling means are floored at one event per control cycle
    // so near-empty history cannot trip the detector.
    let floor = 1000.0 / cfg.control_cycle_ms;
    let storm = obs.in_storm
        || obs.mobility_rate > cfg.storm_detect_multiplier * rolling_mean_rate_per_s.max(floor);
    if storm {
        d.shield.storm_relax = true;
        if matches!(d.action, Action::DeferToWindow { .. }) {
            d.action = Action::Immediate;
        }
    }
    if obs.queue_residency_ms > cfg.queue_residency_critical_ms {
        d.shield.congestion_safe_mode = true;
        if !matches!(d.action, Action::Immediate) {
            d.action = Action::Immediate;
        }
    }
    d
}

/// A scheduling policy: a tactical intent per event. Implementations
/// may keep internal state (batch ledgers, learned values) but must be
/// deterministic functions of their inputs and owned state.
pub trait Policy {
    fn decide(
        &mut self,
        obs: &Observation,
        event: &SecurityEvent,
        accel: Option<&AccelSnapshot>,
    ) -> ScheduleDecision;

    /// Resumption probability the run generates events with, given the
    /// mobility profile's base probability.
    fn effective_resumption_prob(&self, base: f64) -> f64 {
        base
    }

    fn name(&self) -> &'static str;
}

/// Legacy behavior: every event is processed immediately and every
/// event triggers full authentication (no session resumption).
#[derive(Debug, Default, Clone)]
pub struct BaselinePolicy;

impl Policy for BaselinePolicy {
    fn decide(
        &mut self,
        _obs: &Observation,
        _event: &SecurityEvent,
        _accel: Option<&AccelSnapshot>,
    ) -> ScheduleDecision {
        ScheduleDecision::immediate()
    }

    fn effective_resumption_prob(&self, _base: f64) -> f64 {
        0.0
    }

    fn name(&self) -> &'static str {
        "baseline"
    }
}

/// The rule policy with its batch ledger and optional pre-seeding.
#[derive(Debug, Clone)]
pub struct RulePolicy {
    pub cfg: RuleConfig,
    ledger: BatchLedger,
}

impl RulePolicy {
    pub fn new(scenario: &Scenario) -> Self {
        RulePolicy { cfg: RuleConfig::from_scenario(scenario), ledger: BatchLedger::default() }
    }

    pub fn with_preseed(mut self, cache: ResumptionCache) -> Self {
        self.cfg.preseed = Some(cache);
        self
    }

    pub fn with_load_gate(mut self, gate: f64) -> Self {
        self.cfg.load_gate = gate;
        self
    }
}

impl Policy for RulePolicy {
    fn decide(
        &mut self,
        obs: &Observation,
        event: &SecurityEvent,
        accel: Option<&AccelSnapshot>,
    ) -> ScheduleDecision {
        rule_decide(obs, event, &self.cfg, &mut self.ledger, accel)
    }

    fn effective_resumption_prob(&self, base: f64) -> f64 {
        match &self.cfg.preseed {
            Some(cache) => {
                let raw = cache.uplift_per_target.max(0.0) * cache.preseed_horizon as f64;
                (base + raw).min(1.0)
            }
            None => base,
        }
    }

    fn name(&self) -> &'static str {
        "rule"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Scenario;

    fn event(kind: HandshakeKind, slice: SliceClass, arrival_ms: f64) -> SecurityEvent {
        SecurityEvent { id: 0, arrival_ms, oru_id: 0, slice, kind, is_storm_period: false }
    }

    fn calm_obs(residency: f64, service: f64) -> Observation {
        build_observation(residency, service, 17.57, 0.0, 0.0, false, 150.0)
    }

    fn rule_cfg(enabled: bool) -> RuleConfig {
        let mut sc = Scenario::default();
        sc.batching.enabled = enabled;
        RuleConfig::from_scenario(&sc)
    }

    #[test]
    fn observation_headroom_arithmetic() {
        let full_idle = build_observation(0.0, 98.48, 17.57, 0.0, 0.0, false, 150.0);
        assert!((full_idle.headroom_ms - 51.52).abs() < 1e-9);
        let resumed_idle = build_observation(0.0, 4.92, 0.88, 0.0, 0.0, false, 150.0);
        assert!((resumed_idle.headroom_ms - 145.08).abs() < 1e-9);
        let congested = build_observation(75.0, 98.48, 17.57, 0.0, 0.0, false, 150.0);
        assert!((congested.headroom_ms - (-23.48)).abs() < 1e-9);
    }

    #[test]
    fn next_window_boundaries() {
        assert_eq!(next_window_ms(123.0, 50.0), 150.0);
        assert_eq!(next_window_ms(150.0, 50.0), 200.0);
        assert_eq!(next_window_ms(0.0, 50.0), 50.0);
    }

    #[test]
    fn urllc_always_immediate_with_bypass() {
        let cfg = rule_cfg(true);
        let mut ledger = BatchLedger::default();
        // Even a heavily loaded observation cannot defer URLLC.
        let obs = build_observation(120.0, 98.48, 17.57, 0.95, 50.0, true, 150.0);
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Urllc, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(d.action, Action::Immediate);
        assert!(d.shield.urllc_bypass);
    }

    #[test]
    fn resumed_events_run_immediately() {
        let cfg = rule_cfg(true);
        let mut ledger = BatchLedger::default();
        let obs = calm_obs(0.0, 4.92);
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Resumed, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(d.action, Action::Immediate);
        assert!(d.prefer_resume);
    }

    #[test]
    fn idle_full_defers_to_upcoming_window() {
        // Idle system, window 40 ms away: deferred completion is
        // 40 + 98.48 = 138.48 ms, inside the SLA, and the window-relative
        // estimate 98.48 is inside the 0.8 * 150 margin.
        let cfg = rule_cfg(true);
        let mut ledger = BatchLedger::default();
        let obs = calm_obs(0.0, 98.48);
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(d.action, Action::DeferToWindow { window_start_ms: 50.0 });
    }

    #[test]
    fn congested_full_stays_immediate() {
        // Residency 75 ms: window-relative completion 173.48 exceeds the
        // 120 ms margin, so the headroom gate refuses to defer.
        let cfg = rule_cfg(true);
        let mut ledger = BatchLedger::default();
        let obs = calm_obs(75.0, 98.48);
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(d.action, Action::Immediate);
    }

    #[test]
    fn batch_ledger_caps_one_full_per_window() {
        let cfg = rule_cfg(true);
        let mut ledger = BatchLedger::default();
        let obs = calm_obs(0.0, 98.48);
        let first = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert!(matches!(first.action, Action::DeferToWindow { .. }));
        // A second full aimed at the same window sees the batched 98.48 ms
        // and fails the margin test.
        let second = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 12.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(second.action, Action::Immediate);
    }

    #[test]
    fn ledger_resets_on_new_window() {
        let mut ledger = BatchLedger::default();
        ledger.commit(50.0, 98.48);
        assert_eq!(ledger.pending_for(50.0), 98.48);
        assert_eq!(ledger.pending_for(100.0), 0.0);
    }

    #[test]
    fn batching_disabled_never_defers() {
        let cfg = rule_cfg(false);
        let mut ledger = BatchLedger::default();
        let obs = calm_obs(0.0, 98.48);
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(d.action, Action::Immediate);
    }

    #[test]
    fn high_cell_load_closes_the_window() {
        let cfg = rule_cfg(true);
        let mut ledger = BatchLedger::default();
        let obs = build_observation(0.0, 98.48, 17.57, 0.6, 0.0, false, 150.0);
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            None,
        );
        assert_eq!(d.action, Action::Immediate);
    }

    #[test]
    fn shield_relaxes_deferral_in_storm() {
        let cfg = ShieldConfig::default();
        let obs = build_observation(0.0, 98.48, 17.57, 0.0, 0.0, true, 150.0);
        let d = ScheduleDecision {
            action: Action::DeferToWindow { window_start_ms: 50.0 },
            prefer_resume: false,
            shield: ShieldFlags::default(),
        };
        let shielded = shield(d, &obs, &cfg, 0.0);
        assert_eq!(shielded.action, Action::Immediate);
        assert!(shielded.shield.storm_relax);
    }

    #[test]
    fn shield_detects_storm_from_mobility_counters() {
        let cfg = ShieldConfig::default();
        // 20 events/s against a rolling mean of 5/s exceeds the 3x detector.
        let obs = build_observation(0.0, 98.48, 17.57, 0.0, 20.0, false, 150.0);
        let d = ScheduleDecision {
            action: Action::DeferToWindow { window_start_ms: 50.0 },
            prefer_resume: false,
            shield: ShieldFlags::default(),
        };
        let shielded = shield(d, &obs, &cfg, 5.0);
        assert!(shielded.shield.storm_relax);
        assert_eq!(shielded.action, Action::Immediate);
    }

    #[test]
    fn shield_enters_safe_mode_on_critical_residency() {
        let cfg = ShieldConfig::default();
        let obs = build_observation(100.0, 98.48, 17.57, 0.0, 0.0, false, 150.0);
        let shielded = shield(ScheduleDecision::immediate(), &obs, &cfg, 0.0);
        assert_eq!(shielded.action, Action::Immediate);
        assert!(shielded.shield.congestion_safe_mode);
        // Offload is also pulled back under congestion.
        let offload = ScheduleDecision {
            action: Action::Offload,
            prefer_resume: false,
            shield: ShieldFlags::default(),
        };
        assert_eq!(shield(offload, &obs, &cfg, 0.0).action, Action::Immediate);
    }

    #[test]
    fn shield_is_idempotent_and_calm_passthrough() {
        let cfg = ShieldConfig::default();
        let calm = build_observation(10.0, 98.48, 17.57, 0.1, 0.5, false, 150.0);
        let d = ScheduleDecision::immediate();
        assert_eq!(shield(d, &calm, &cfg, 0.5), d);

        let stormy = build_observation(100.0, 98.48, 17.57, 0.1, 0.5, true, 150.0);
        let once = shield(d, &stormy, &cfg, 0.5);
        let twice = shield(once, &stormy, &cfg, 0.5);
        assert_eq!(once, twice);
    }

    #[test]
    fn preseed_uplift_examples() {
        let base_low = MobilityProfile { resumption_prob: 0.40, ..MobilityProfile::default() };
        let none = ResumptionCache { uplift_per_target: 0.23, preseed_horizon: 0 };
        assert_eq!(preseed_uplift(&none, &base_low), 0.0);

        let one = ResumptionCache { uplift_per_target: 0.23, preseed_horizon: 1 };
        let uplift = preseed_uplift(&one, &base_low);
        assert!((base_low.resumption_prob + uplift - 0.63).abs() < 1e-12);

        let base_high = MobilityProfile { resumption_prob: 0.63, ..MobilityProfile::default() };
        let big = ResumptionCache { uplift_per_target: 0.5, preseed_horizon: 1 };
        let uplift = preseed_uplift(&big, &base_high);
        assert!((base_high.resumption_prob + uplift - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preseed_uplift_monotone_in_horizon() {
        let m = MobilityProfile { resumption_prob: 0.2, ..MobilityProfile::default() };
        let mut last = -1.0;
        for horizon in 0..10 {
            let cache = ResumptionCache { uplift_per_target: 0.1, preseed_horizon: horizon };
            let u = preseed_uplift(&cache, &m);
            assert!(u >= last);
            assert!(u <= 1.0 - m.resumption_prob + 1e-12);
            last = u;
        }
    }

    #[test]
    fn rekey_freeze_shifts_to_storm_end_or_deadline() {
        let timers = vec![
            RekeyTimer { fire_at_ms: 1000.0, deadline_ms: 2000.0 },
            RekeyTimer { fire_at_ms: 1000.0, deadline_ms: 1200.0 },
            RekeyTimer { fire_at_ms: 800.0, deadline_ms: 2000.0 },
        ];
        let frozen = freeze_rekeys(&timers, Some((900.0, 1500.0)));
        assert_eq!(frozen[0].fire_at_ms, 1500.0);
        assert_eq!(frozen[1].fire_at_ms, 1200.0);
        assert_eq!(frozen[2].fire_at_ms, 800.0);
        assert_eq!(freeze_rekeys(&timers, None), timers);
    }

    #[test]
    fn accelerator_admission_gates() {
        let cfg = AccelConfig { speedup: 4.0, per_op_overhead_mj: 1.0, queue_depth_cap: 4 };
        let idle = AccelSnapshot { residency_ms: 0.0, depth: 0, cfg };
        // Saving 17.57 * 0.75 = 13.18 mJ beats the 1 mJ overhead and
        // 24.62 ms fits the budget.
        assert!(accelerator_admit(17.57, 98.48, &idle, 150.0));

        let full_queue = AccelSnapshot { residency_ms: 0.0, depth: 4, cfg };
        assert!(!accelerator_admit(17.57, 98.48, &full_queue, 150.0));

        let lossy =
            AccelConfig { speedup: 4.0, per_op_overhead_mj: 20.0, queue_depth_cap: 4 };
        let no_gain = AccelSnapshot { residency_ms: 0.0, depth: 0, cfg: lossy };
        assert!(!accelerator_admit(17.57, 98.48, &no_gain, 150.0));

        let slow = AccelSnapshot { residency_ms: 140.0, depth: 0, cfg };
        assert!(!accelerator_admit(17.57, 98.48, &slow, 150.0));
    }

    #[test]
    fn rule_offloads_when_deferral_fails_and_admission_passes() {
        let cfg = rule_cfg(false);
        let mut ledger = BatchLedger::default();
        let obs = calm_obs(0.0, 98.48);
        let accel = AccelSnapshot {
            residency_ms: 0.0,
            depth: 0,
            cfg: AccelConfig { speedup: 4.0, per_op_overhead_mj: 1.0, queue_depth_cap: 4 },
        };
        let d = rule_decide(
            &obs,
            &event(HandshakeKind::Full, SliceClass::Embb, 10.0),
            &cfg,
            &mut ledger,
            Some(&accel),
        );
        assert_eq!(d.action, Action::Offload);
    }

    #[test]
    fn decisions_are_pure_given_identical_state() {
        let cfg = rule_cfg(true);
        let obs = calm_obs(5.0, 98.48);
        let ev = event(HandshakeKind::Full, SliceClass::Embb, 10.0);
        let mut l1 = BatchLedger::default();
        let mut l2 = BatchLedger::default();
        let d1 = rule_decide(&obs, &ev, &cfg, &mut l1, None);
        let d2 = rule_decide(&obs, &ev, &cfg, &mut l2, None);
        assert_eq!(d1, d2);
    }

    #[test]
    fn baseline_policy_disables_resumption() {
        let p = BaselinePolicy;
        assert_eq!(p.effective_resumption_prob(0.63), 0.0);
    }

    #[test]
    fn rule_policy_preseed_raises_effective_probability() {
        let sc = Scenario::default();
        let plain = RulePolicy::new(&sc);
        assert_eq!(plain.effective_resumption_prob(0.40), 0.40);
        let seeded = RulePolicy::new(&sc)
            .with_preseed(ResumptionCache { uplift_per_target: 0.23, preseed_horizon: 1 });
        assert!((seeded.effective_resumption_prob(0.40) - 0.63).abs() < 1e-12);
        assert_eq!(seeded.effective_resumption_prob(0.9), 1.0);
    }
}
