//! Constrained tabular reinforcement learning: the observation is
//! discretized into 48 states, actions are masked by the same safety
//! logic the rule policy enforces, and one-step Q-learning runs across
//! simulated episodes. Safety is structural — a masked action can never
//! be selected — rather than left to reward shaping.

use crate::domain::{CostModel, HandshakeKind, Scenario, ShieldConfig, SliceClass};
use crate::engine::{self, EngineError};
use crate::scheduler::{
    defer_window, accelerator_admit, AccelSnapshot, Action, BatchLedger, Observation, Policy,
    ResumptionCache, RuleConfig, ScheduleDecision, ShieldFlags,
};
use crate::workload::{SecurityEvent, SimRng};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

pub const N_STATES: usize = 48;
pub const N_ACTIONS: usize = 3;

pub const ACTION_IMMEDIATE: usize = 0;
pub const ACTION_DEFER: usize = 1;
pub const ACTION_OFFLOAD: usize = 2;

const ACTION_NAMES: [&str; N_ACTIONS] = ["immediate", "defer", "offload"];

/// Discretized observation: 4 headroom x 3 load x 2 mobility x 2 proxy
/// buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateBuckets {
    /// 0: < 0 ms, 1: [0, 25), 2: [25, 75), 3: >= 75.
    pub headroom: u8,
    /// 0: < 0.3, 1: [0.3, 0.7), 2: >= 0.7.
    pub load: u8,
    pub storm: bool,
    /// True when the pending operation is a full handshake by energy proxy.
    pub full_proxy: bool,
}

pub fn bucketize(obs: &Observation, cost: &CostModel) -> StateBuckets {
    let headroom = if obs.headroom_ms < 0.0 {
        0
    } else if obs.headroom_ms < 25.0 {
        1
    } else if obs.headroom_ms < 75.0 {
        2
    } else {
        3
    };
    let load = if obs.cell_load < 0.3 {
        0
    } else if obs.cell_load < 0.7 {
        1
    } else {
        2
    };
    let midpoint = (cost.resumed_energy_mj + cost.full_energy_mj) / 2.0;
    StateBuckets {
        headroom,
        load,
        storm: obs.in_storm,
        full_proxy: obs.energy_proxy_mj > midpoint,
    }
}

pub fn encode_state(b: StateBuckets) -> usize {
    b.headroom as usize
        + 4 * (b.load as usize + 3 * (usize::from(b.storm) + 2 * usize::from(b.full_proxy)))
}

pub fn decode_state(idx: usize) -> StateBuckets {
    debug_assert!(idx < N_STATES);
    let headroom = (idx % 4) as u8;
    let rest = idx / 4;
    let load = (rest % 3) as u8;
    let rest = rest / 3;
    let storm = rest % 2 == 1;
    let full_proxy = rest / 2 == 1;
    StateBuckets { headroom, load, storm, full_proxy }
}

pub fn state_index(obs: &Observation, cost: &CostModel) -> usize {
    encode_state(bucketize(obs, cost))
}

/// Action-value table over the 48 discrete states.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub values: Vec<[f64; N_ACTIONS]>,
    pub visits: Vec<[u64; N_ACTIONS]>,
}

impl Default for QTable {
    fn default() -> Self {
        QTable { values: vec![[0.0; N_ACTIONS]; N_STATES], visits: vec![[0; N_ACTIONS]; N_STATES] }
    }
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }
}

pub type ActionMask = [bool; N_ACTIONS];

/// Builds the safety mask for one decision. Immediate is always
/// available; URLLC is pinned to it. Defer survives only when the
/// headroom-after-deferral gate passes and no shield condition
/// (storm, critical residency) holds; Offload survives only when
/// accelerator admission passes.
#[allow(clippy::too_many_arguments)]
pub fn action_mask(
    obs: &Observation,
    event: &SecurityEvent,
    cfg: &RuleConfig,
    shield_cfg: &ShieldConfig,
    ledger: &mut BatchLedger,
    accel: Option<&AccelSnapshot>,
) -> ActionMask {
    let mut mask = [true, false, false];
    if event.slice == SliceClass::Urllc {
        return mask;
    }
    let expected = cfg.cost.service_time_ms(event.kind);
    let shielded =
        obs.in_storm || obs.queue_residency_ms > shield_cfg.queue_residency_critical_ms;
    if !shielded
        && defer_window(
            obs,
            event.arrival_ms,
            expected,
            &cfg.batching,
            cfg.load_gate,
            ledger,
            cfg.sla_ms,
        )
        .is_some()
    {
        mask[ACTION_DEFER] = true;
    }
    if let Some(snapshot) = accel {
        if accelerator_admit(obs.energy_proxy_mj, expected, snapshot, cfg.sla_ms) {
            mask[ACTION_OFFLOAD] = true;
        }
    }
    mask
}

/// Epsilon-greedy selection over the masked actions. Ties break toward
/// the lowest action index (immediate < defer < offload). Panics if the
/// mask is empty; the mask contract keeps Immediate always available.
pub fn select_action(
    q_row: &[f64; N_ACTIONS],
    mask: ActionMask,
    epsilon: f64,
    rng: Option<&mut SimRng>,
) -> usize {
    let allowed: Vec<usize> = (0..N_ACTIONS).filter(|&a| mask[a]).collect();
    assert!(!allowed.is_empty(), "empty action mask");
    if let Some(rng) = rng {
        if epsilon > 0.0 && rng.uniform() < epsilon {
            let pick = (rng.uniform() * allowed.len() as f64) as usize;
            return allowed[pick.min(allowed.len() - 1)];
        }
    }
    let mut best = allowed[0];
    for &a in &allowed[1..] {
        if q_row[a] > q_row[best] {
            best = a;
        }
    }
    best
}

fn masked_max(q_row: &[f64; N_ACTIONS], mask: ActionMask) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for a in 0..N_ACTIONS {
        if mask[a] && q_row[a] > best {
            best = q_row[a];
        }
    }
    if best == f64::NEG_INFINITY {
        0.0
    } else {
        best
    }
}

/// One-step temporal-difference update over the masked next-state
/// actions. `next` is `None` at the end of an episode.
pub fn update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next: Option<(usize, ActionMask)>,
    alpha: f64,
    gamma: f64,
) {
    let future = next.map_or(0.0, |(s, mask)| masked_max(&q.values[s], mask));
    let current = q.values[state][action];
    q.values[state][action] = current + alpha * (reward + gamma * future - current);
    q.visits[state][action] += 1;
}

/// One recorded decision during a learning episode.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub event_id: u64,
    pub state: usize,
    pub action: usize,
    pub mask: ActionMask,
}

/// Tabular policy over the discretized observation. Frozen policies are
/// pure greedy; learning policies draw epsilon-greedy from an owned rng
/// and record their trajectory for the post-episode updates.
pub struct RlPolicy {
    pub q: QTable,
    cfg: RuleConfig,
    shield_cfg: ShieldConfig,
    epsilon: f64,
    rng: Option<SimRng>,
    ledger: BatchLedger,
    trajectory: Vec<Step>,
    record_trajectory: bool,
}

impl RlPolicy {
    /// Greedy policy around a (typically trained) table.
    pub fn frozen(q: QTable, scenario: &Scenario) -> Self {
        RlPolicy {
            q,
            cfg: RuleConfig::from_scenario(scenario),
            shield_cfg: scenario.shield,
            epsilon: 0.0,
            rng: None,
            ledger: BatchLedger::default(),
            trajectory: Vec::new(),
            record_trajectory: false,
        }
    }

    fn learning(q: QTable, scenario: &Scenario, epsilon: f64, rng_seed: u64) -> Self {
        RlPolicy {
            q,
            cfg: RuleConfig::from_scenario(scenario),
            shield_cfg: scenario.shield,
            epsilon,
            rng: Some(SimRng::new(rng_seed, 0)),
            ledger: BatchLedger::default(),
            trajectory: Vec::new(),
            record_trajectory: true,
        }
    }

    pub fn with_preseed(mut self, cache: ResumptionCache) -> Self {
        self.cfg.preseed = Some(cache);
        self
    }

    fn into_parts(self) -> (QTable, Vec<Step>) {
        (self.q, self.trajectory)
    }
}

impl Policy for RlPolicy {
    fn decide(
        &mut self,
        obs: &Observation,
        event: &SecurityEvent,
        accel: Option<&AccelSnapshot>,
    ) -> ScheduleDecision {
        let state = state_index(obs, &self.cfg.cost);
        let mask =
            action_mask(obs, event, &self.cfg, &self.shield_cfg, &mut self.ledger, accel);
        let action =
            select_action(&self.q.values[state], mask, self.epsilon, self.rng.as_mut());
        debug_assert!(mask[action], "selected action outside mask");
        if self.record_trajectory {
            self.trajectory.push(Step { event_id: event.id, state, action, mask });
        }

        let prefer_resume = event.kind == HandshakeKind::Resumed;
        let shield = ShieldFlags {
            urllc_bypass: event.slice == SliceClass::Urllc,
            ..ShieldFlags::default()
        };
        let expected = self.cfg.cost.service_time_ms(event.kind);
        let action = match action {
            ACTION_DEFER => {
                // The mask verified the gate; recompute the window and
                // commit the batched work.
                let window = defer_window(
                    obs,
                    event.arrival_ms,
                    expected,
                    &self.cfg.batching,
                    self.cfg.load_gate,
                    &mut self.ledger,
                    self.cfg.sla_ms,
                )
                .expect("masked defer without an open window");
                self.ledger.commit(window, expected);
                Action::DeferToWindow { window_start_ms: window }
            }
            ACTION_OFFLOAD => Action::Offload,
            _ => Action::Immediate,
        };
        ScheduleDecision { action, prefer_resume, shield }
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
        "rl"
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct Hyper {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Penalty added to the reward when a completion misses the SLA; must
    /// dominate the maximum normalized energy saving (< 1).
    pub sla_penalty: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            alpha: 0.3,
            gamma: 0.9,
            epsilon_start: 0.2,
            epsilon_decay: 0.9,
            epsilon_min: 0.01,
            sla_penalty: 10.0,
        }
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub episode: u32,
    pub mean_energy_mj: f64,
    pub sla_compliance: f64,
    pub epsilon: f64,
}

/// Output of a training run.
pub struct TrainResult {
    pub policy: RlPolicy,
    pub curve: Vec<CurvePoint>,
    /// Trajectory audit: decisions whose action fell outside the mask.
    /// Structurally zero.
    pub mask_violations: usize,
}

/// Trains a tabular policy over `episodes` simulated runs of the
/// scenario. Each episode uses a distinct derived seed; rewards are the
/// negated per-operation energy normalized by the full-handshake cost,
/// minus the SLA penalty on violations. Fully deterministic for a given
/// (scenario, episodes, hyper, seed).
pub fn train(
    scenario: &Scenario,
    episodes: u32,
    hyper: &Hyper,
    seed: u64,
) -> Result<TrainResult, EngineError> {
    let mut q = QTable::new();
    let mut curve = Vec::with_capacity(episodes as usize);
    let mut mask_violations = 0usize;
    let full = scenario.cost_model.full_energy_mj;

    for episode in 0..episodes {
        let epsilon = (hyper.epsilon_start * hyper.epsilon_decay.powi(episode as i32))
            .max(hyper.epsilon_min);
        let policy_seed = seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(episode as u64 + 1);
        let mut policy = RlPolicy::learning(q, scenario, epsilon, policy_seed);
        let out = engine::run(scenario, &mut policy, seed.wrapping_add(episode as u64))?;
        let (table, trajectory) = policy.into_parts();
        q = table;

        for step in &trajectory {
            if !step.mask[step.action] {
                mask_violations += 1;
            }
        }
        for i in 0..trajectory.len() {
            let step = trajectory[i];
            let rec = &out.records[step.event_id as usize];
            debug_assert_eq!(rec.event_id, step.event_id);
            let mut reward = -rec.energy_mj / full;
            if rec.latency_ms() > scenario.sla_ms {
                reward -= hyper.sla_penalty;
            }
            let next = trajectory.get(i + 1).map(|n| (n.state, n.mask));
            update(&mut q, step.state, step.action, reward, next, hyper.alpha, hyper.gamma);
        }

        let violations = out.stats.n_sla_violations;
        curve.push(CurvePoint {
            episode,
            mean_energy_mj: out.stats.mean_energy_mj,
            sla_compliance: if out.stats.n_events == 0 {
                1.0
            } else {
                1.0 - violations as f64 / out.stats.n_events as f64
            },
            epsilon,
        });
    }

    Ok(TrainResult { policy: RlPolicy::frozen(q, scenario), curve, mask_violations })
}

/// One checkpoint row: a (state, action) cell of the table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub state: usize,
    pub action: String,
    pub value: f64,
    pub visits: u64,
}

/// Serializes the full table (48 x 3 entries) as a JSON array.
pub fn write_checkpoint<W: Write>(out: &mut W, q: &QTable) -> io::Result<()> {
    let entries: Vec<CheckpointEntry> = (0..N_STATES)
        .flat_map(|s| {
            (0..N_ACTIONS).map(move |a| CheckpointEntry {
                state: s,
                action: ACTION_NAMES[a].to_string(),
                value: q.values[s][a],
                visits: q.visits[s][a],
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut *out, &entries)?;
    writeln!(out)
}

/// Loads a checkpoint produced by [`write_checkpoint`].
pub fn read_checkpoint(text: &str) -> Result<QTable, String> {
    let entries: Vec<CheckpointEntry> =
        serde_json::from_str(text).map_err(|e| format!("invalid checkpoint: {e}"))?;
    let mut q = QTable::new();
    for e in &entries {
        if e.state >= N_STATES {
            return Err(format!("checkpoint state {} out of range", e.state));
        }
        let action = ACTION_NAMES
            .iter()
            .position(|&n| n == e.action)
            .ok_or_else(|| format!("unknown checkpoint action `{}`", e.action))?;
        q.values[e.state][action] = e.value;
        q.visits[e.state][action] = e.visits;
    }
    Ok(q)
}

/// Writes the training curve: `episode,mean_energy_mJ,sla_compliance,epsilon`.
pub fn write_curve_csv<W: Write>(out: &mut W, curve: &[CurvePoint]) -> io::Result<()> {
    writeln!(out, "episode,mean_energy_mJ,sla_compliance,epsilon")?;
    for p in curve {
        writeln!(out, "{},{},{},{}", p.episode, p.mean_energy_mj, p.sla_compliance, p.epsilon)?;
    }
    Ok(())
}
