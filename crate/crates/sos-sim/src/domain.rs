//! Shared domain types, the scenario configuration schema and its
//! validation, and the closed-form energy model that tests and reports
//! use as an oracle.
//!
//! All times are carried internally as milliseconds in `f64`, all
//! energies as millijoules. Scenario files are UTF-8 JSON; the schema
//! and its defaults are documented in the repository README.

use serde::Serialize;
use serde_json::Value;
use std::fmt;

/// Full PQC handshake energy on an embedded-class profile (mJ).
pub const DEFAULT_FULL_ENERGY_MJ: f64 = 17.57;
/// Full PQC handshake computation time (ms).
pub const DEFAULT_FULL_TIME_MS: f64 = 98.48;
/// Resumed (PSK) handshake energy, ~5% of the full cost (mJ).
pub const DEFAULT_RESUMED_ENERGY_MJ: f64 = 0.88;
/// Resumed (PSK) handshake computation time (ms).
pub const DEFAULT_RESUMED_TIME_MS: f64 = 4.92;

/// Energy (mJ) and service-time (ms) coefficients for full vs resumed
/// handshakes. Characterized offline; the simulator treats them as
/// static per-operation costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostModel {
    #[serde(rename = "full_energy_mJ")]
    pub full_energy_mj: f64,
    pub full_time_ms: f64,
    #[serde(rename = "resumed_energy_mJ")]
    pub resumed_energy_mj: f64,
    pub resumed_time_ms: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            full_energy_mj: DEFAULT_FULL_ENERGY_MJ,
            full_time_ms: DEFAULT_FULL_TIME_MS,
            resumed_energy_mj: DEFAULT_RESUMED_ENERGY_MJ,
            resumed_time_ms: DEFAULT_RESUMED_TIME_MS,
        }
    }
}

impl CostModel {
    /// Cost model where the resumed coefficients are an exact fraction of
    /// the full-handshake coefficients.
    pub fn with_resumed_fraction(full_energy_mj: f64, full_time_ms: f64, frac: f64) -> Self {
        CostModel {
            full_energy_mj,
            full_time_ms,
            resumed_energy_mj: full_energy_mj * frac,
            resumed_time_ms: full_time_ms * frac,
        }
    }

    pub fn energy_mj(&self, kind: HandshakeKind) -> f64 {
        match kind {
            HandshakeKind::Full => self.full_energy_mj,
            HandshakeKind::Resumed => self.resumed_energy_mj,
        }
    }

    pub fn service_time_ms(&self, kind: HandshakeKind) -> f64 {
        match kind {
            HandshakeKind::Full => self.full_time_ms,
            HandshakeKind::Resumed => self.resumed_time_ms,
        }
    }

    /// Ratio of resumed to full energy; the floor of `relative_energy`.
    pub fn resumed_energy_ratio(&self) -> f64 {
        self.resumed_energy_mj / self.full_energy_mj
    }
}

/// Traffic slice class of a security event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceClass {
    Urllc,
    Embb,
}

impl fmt::Display for SliceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceClass::Urllc => write!(f, "urllc"),
            SliceClass::Embb => write!(f, "embb"),
        }
    }
}

/// Per-class delay budgets in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceBudgets {
    pub urllc_ms: f64,
    pub embb_ms: f64,
}

impl Default for SliceBudgets {
    fn default() -> Self {
        SliceBudgets { urllc_ms: 10.0, embb_ms: 150.0 }
    }
}

impl SliceBudgets {
    pub fn budget_ms(&self, slice: SliceClass) -> f64 {
        match slice {
            SliceClass::Urllc => self.urllc_ms,
            SliceClass::Embb => self.embb_ms,
        }
    }
}

/// How a security event is resolved: a full PQC handshake or an
/// abbreviated session resumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HandshakeKind {
    Full,
    Resumed,
}

impl fmt::Display for HandshakeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HandshakeKind::Full => write!(f, "full"),
            HandshakeKind::Resumed => write!(f, "resumed"),
        }
    }
}

/// A handover-storm burst: arrivals are multiplied and the resumption
/// probability is penalized inside `[start_s, start_s + duration_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StormParams {
    pub start_s: f64,
    pub duration_s: f64,
    pub arrival_multiplier: f64,
    pub resumption_penalty: f64,
}

impl StormParams {
    pub fn window_ms(&self) -> (f64, f64) {
        (self.start_s * 1000.0, (self.start_s + self.duration_s) * 1000.0)
    }

    pub fn contains_ms(&self, t_ms: f64) -> bool {
        let (start, end) = self.window_ms();
        t_ms >= start && t_ms < end
    }
}

/// Named mobility profile: how likely sessions survive handovers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobilityProfile {
    pub name: String,
    pub resumption_prob: f64,
    pub handover_rate_per_hour: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storm: Option<StormParams>,
}

impl Default for MobilityProfile {
    fn default() -> Self {
        MobilityProfile {
            name: "urban-vehicular-60kmh".to_string(),
            resumption_prob: 0.63,
            handover_rate_per_hour: 90.0,
            storm: None,
        }
    }
}

impl MobilityProfile {
    /// Resumption probability at time `t_ms`: the storm penalty applies
    /// inside the storm window, floored at zero.
    pub fn resumption_prob_at(&self, t_ms: f64) -> f64 {
        match &self.storm {
            Some(s) if s.contains_ms(t_ms) => (self.resumption_prob - s.resumption_penalty).max(0.0),
            _ => self.resumption_prob,
        }
    }

    pub fn in_storm(&self, t_ms: f64) -> bool {
        self.storm.is_some_and(|s| s.contains_ms(t_ms))
    }
}

/// Where handshakes are enforced: a shared terminator pool or one
/// terminator per radio unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    SharedTerminator { servers: u32 },
    PerOru,
}

impl Default for Topology {
    fn default() -> Self {
        Topology::SharedTerminator { servers: 1 }
    }
}

/// Service-time law at the enforcement endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceDiscipline {
    #[default]
    Deterministic,
    Exponential,
}

/// Batching-window parameters for deferrable handshakes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchConfig {
    pub window_ms: f64,
    pub safety_margin_frac: f64,
    pub enabled: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { window_ms: 50.0, safety_margin_frac: 0.8, enabled: false }
    }
}

/// Safety-shield thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShieldConfig {
    pub queue_residency_critical_ms: f64,
    pub storm_detect_multiplier: f64,
    pub control_cycle_ms: f64,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        ShieldConfig {
            queue_residency_critical_ms: 75.0,
            storm_detect_multiplier: 3.0,
            control_cycle_ms: 250.0,
        }
    }
}

/// Optional hardware-accelerator model: a service-time divisor with a
/// per-operation offload overhead and an admission queue-depth cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccelConfig {
    pub speedup: f64,
    #[serde(rename = "per_op_overhead_mJ")]
    pub per_op_overhead_mj: f64,
    pub queue_depth_cap: u32,
}

/// A fully validated simulation scenario. Immutable after validation;
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub n_orus: u32,
    pub horizon_s: f64,
    pub arrival_rate_per_oru_per_hour: f64,
    pub cost_model: CostModel,
    pub mobility: MobilityProfile,
    pub slice_budgets: SliceBudgets,
    pub urllc_share: f64,
    pub topology: Topology,
    pub service_discipline: ServiceDiscipline,
    pub sla_ms: f64,
    pub batching: BatchConfig,
    pub shield: ShieldConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accelerator: Option<AccelConfig>,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_orus: 100,
            horizon_s: 86_400.0,
            arrival_rate_per_oru_per_hour: 90.0,
            cost_model: CostModel::default(),
            mobility: MobilityProfile::default(),
            slice_budgets: SliceBudgets::default(),
            urllc_share: 0.0,
            topology: Topology::default(),
            service_discipline: ServiceDiscipline::default(),
            sla_ms: 150.0,
            batching: BatchConfig::default(),
            shield: ShieldConfig::default(),
            accelerator: None,
            seed: 42,
        }
    }
}

impl Scenario {
    pub fn horizon_ms(&self) -> f64 {
        self.horizon_s * 1000.0
    }

    /// Arrival rate per O-RU in events per millisecond.
    pub fn arrival_rate_per_oru_per_ms(&self) -> f64 {
        self.arrival_rate_per_oru_per_hour / 3_600_000.0
    }

    /// Number of software enforcement servers (excluding any accelerator).
    pub fn n_servers(&self) -> usize {
        match self.topology {
            Topology::SharedTerminator { servers } => servers as usize,
            Topology::PerOru => self.n_orus as usize,
        }
    }
}

/// A scenario-config validation failure. Each variant names the
/// offending path in the JSON document.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("`{field}` out of range: must satisfy {bound}")]
    OutOfRange { field: String, bound: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{field}`: expected {expected}")]
    WrongType { field: String, expected: String },
    #[error("not valid JSON: {0}")]
    Json(String),
}

/// Domain errors from the closed-form energy model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("resumption probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("savings fraction {got} unreachable: must lie in [0, {max}]")]
    SavingsUnreachable { got: f64, max: f64 },
}

/// Expected energy per handshake (mJ) at resumption probability
/// `p_resume`: `p * resumed + (1 - p) * full`.
pub fn expected_energy_mj(cost: &CostModel, p_resume: f64) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&p_resume) {
        return Err(DomainError::ProbabilityOutOfRange(p_resume));
    }
    Ok(p_resume * cost.resumed_energy_mj + (1.0 - p_resume) * cost.full_energy_mj)
}

/// Expected energy normalized to the zero-resumption baseline.
pub fn relative_energy(cost: &CostModel, p_resume: f64) -> Result<f64, DomainError> {
    let e = expected_energy_mj(cost, p_resume)?;
    Ok(e / cost.full_energy_mj)
}

/// Inverts `relative_energy`: the resumption probability that yields a
/// given fractional energy saving. Savings beyond `1 - resumed/full`
/// are unreachable for the cost model.
pub fn resumption_for_savings(cost: &CostModel, savings_frac: f64) -> Result<f64, DomainError> {
    let max = 1.0 - cost.resumed_energy_ratio();
    if !(0.0..=max).contains(&savings_frac) {
        return Err(DomainError::SavingsUnreachable { got: savings_frac, max });
    }
    Ok(savings_frac / max)
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ConfigError>> {
    let raw: Value =
        serde_json::from_str(text).map_err(|e| vec![ConfigError::Json(e.to_string())])?;
    validate_scenario(&raw)
}

/// Validates a parsed JSON document into a fully-defaulted `Scenario`.
///
/// Missing fields take their documented defaults; unknown keys are hard
/// errors. All invariant violations found are reported together.
pub fn validate_scenario(raw: &Value) -> Result<Scenario, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let root = match raw.as_object() {
        Some(m) => m,
        None => {
            return Err(vec![ConfigError::WrongType {
                field: "<root>".into(),
                expected: "object".into(),
            }])
        }
    };

    const ROOT_KEYS: &[&str] = &[
        "n_orus",
        "horizon_s",
        "arrival_rate_per_oru_per_hour",
        "cost_model",
        "mobility",
        "slice_budgets",
        "urllc_share",
        "topology",
        "service_discipline",
        "sla_ms",
        "batching",
        "shield",
        "accelerator",
        "seed",
    ];
    check_keys(root, "", ROOT_KEYS, &mut errors);

    let mut sc = Scenario::default();

    if let Some(v) = field_u64(root, "", "n_orus", &mut errors) {
        ensure(&mut errors, v >= 1, "n_orus", ">= 1");
        sc.n_orus = v.min(u32::MAX as u64) as u32;
    }
    if let Some(v) = field_f64(root, "", "horizon_s", &mut errors) {
        ensure(&mut errors, v > 0.0, "horizon_s", "> 0");
        sc.horizon_s = v;
    }
    if let Some(v) = field_f64(root, "", "arrival_rate_per_oru_per_hour", &mut errors) {
        ensure(&mut errors, v >= 0.0, "arrival_rate_per_oru_per_hour", ">= 0");
        sc.arrival_rate_per_oru_per_hour = v;
    }
    if let Some(obj) = field_obj(root, "", "cost_model", &mut errors) {
        sc.cost_model = validate_cost_model(obj, &mut errors);
    }
    if let Some(obj) = field_obj(root, "", "mobility", &mut errors) {
        sc.mobility = validate_mobility(obj, &mut errors);
    }
    if let Some(obj) = field_obj(root, "", "slice_budgets", &mut errors) {
        sc.slice_budgets = validate_slice_budgets(obj, &mut errors);
    }
    if let Some(v) = field_f64(root, "", "urllc_share", &mut errors) {
        ensure(&mut errors, (0.0..=1.0).contains(&v), "urllc_share", "in [0, 1]");
        sc.urllc_share = v;
    }
    if let Some(obj) = field_obj(root, "", "topology", &mut errors) {
        if let Some(t) = validate_topology(obj, &mut errors) {
            sc.topology = t;
        }
    }
    if let Some(s) = field_str(root, "", "service_discipline", &mut errors) {
        match s {
            "deterministic" => sc.service_discipline = ServiceDiscipline::Deterministic,
            "exponential" => sc.service_discipline = ServiceDiscipline::Exponential,
            _ => errors.push(ConfigError::OutOfRange {
                field: "service_discipline".into(),
                bound: "one of \"deterministic\", \"exponential\"".into(),
            }),
        }
    }
    if let Some(v) = field_f64(root, "", "sla_ms", &mut errors) {
        ensure(&mut errors, v > 0.0, "sla_ms", "> 0");
        sc.sla_ms = v;
    }
    if let Some(obj) = field_obj(root, "", "batching", &mut errors) {
        sc.batching = validate_batching(obj, &mut errors);
    }
    if let Some(obj) = field_obj(root, "", "shield", &mut errors) {
        sc.shield = validate_shield(obj, &mut errors);
    }
    if let Some(obj) = field_obj(root, "", "accelerator", &mut errors) {
        sc.accelerator = validate_accelerator(obj, &mut errors);
    }
    if let Some(v) = field_u64(root, "", "seed", &mut errors) {
        sc.seed = v;
    }

    if errors.is_empty() {
        Ok(sc)
    } else {
        Err(errors)
    }
}

fn validate_cost_model(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> CostModel {
    const KEYS: &[&str] =
        &["full_energy_mJ", "full_time_ms", "resumed_energy_mJ", "resumed_time_ms"];
    check_keys(obj, "cost_model.", KEYS, errors);
    let mut cm = CostModel::default();
    if let Some(v) = field_f64(obj, "cost_model.", "full_energy_mJ", errors) {
        ensure(errors, v > 0.0, "cost_model.full_energy_mJ", "> 0");
        cm.full_energy_mj = v;
    }
    if let Some(v) = field_f64(obj, "cost_model.", "full_time_ms", errors) {
        ensure(errors, v > 0.0, "cost_model.full_time_ms", "> 0");
        cm.full_time_ms = v;
    }
    if let Some(v) = field_f64(obj, "cost_model.", "resumed_energy_mJ", errors) {
        ensure(errors, v > 0.0, "cost_model.resumed_energy_mJ", "> 0");
        cm.resumed_energy_mj = v;
    }
    if let Some(v) = field_f64(obj, "cost_model.", "resumed_time_ms", errors) {
        ensure(errors, v > 0.0, "cost_model.resumed_time_ms", "> 0");
        cm.resumed_time_ms = v;
    }
    ensure(
        errors,
        cm.resumed_energy_mj < cm.full_energy_mj,
        "cost_model.resumed_energy_mJ",
        "< full_energy_mJ",
    );
    ensure(
        errors,
        cm.resumed_time_ms < cm.full_time_ms,
        "cost_model.resumed_time_ms",
        "< full_time_ms",
    );
    cm
}

fn validate_mobility(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> MobilityProfile {
    const KEYS: &[&str] = &["name", "resumption_prob", "handover_rate_per_hour", "storm"];
    check_keys(obj, "mobility.", KEYS, errors);
    let mut m = MobilityProfile::default();
    if let Some(s) = field_str(obj, "mobility.", "name", errors) {
        m.name = s.to_string();
    }
    if let Some(v) = field_f64(obj, "mobility.", "resumption_prob", errors) {
        ensure(errors, (0.0..=1.0).contains(&v), "mobility.resumption_prob", "in [0, 1]");
        m.resumption_prob = v;
    }
    if let Some(v) = field_f64(obj, "mobility.", "handover_rate_per_hour", errors) {
        ensure(errors, v >= 0.0, "mobility.handover_rate_per_hour", ">= 0");
        m.handover_rate_per_hour = v;
    }
    if let Some(sobj) = field_obj(obj, "mobility.", "storm", errors) {
        m.storm = validate_storm(sobj, errors);
    }
    m
}

fn validate_storm(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> Option<StormParams> {
    const KEYS: &[&str] = &["start_s", "duration_s", "arrival_multiplier", "resumption_penalty"];
    check_keys(obj, "mobility.storm.", KEYS, errors);
    let start_s = require_f64(obj, "mobility.storm.", "start_s", errors);
    let duration_s = require_f64(obj, "mobility.storm.", "duration_s", errors);
    let arrival_multiplier = require_f64(obj, "mobility.storm.", "arrival_multiplier", errors);
    // Penalty defaults to 0: a pure arrival burst.
    let resumption_penalty =
        field_f64(obj, "mobility.storm.", "resumption_penalty", errors).unwrap_or(0.0);
    let (start_s, duration_s, arrival_multiplier) = (start_s?, duration_s?, arrival_multiplier?);
    ensure(errors, start_s >= 0.0, "mobility.storm.start_s", ">= 0");
    ensure(errors, duration_s > 0.0, "mobility.storm.duration_s", "> 0");
    ensure(errors, arrival_multiplier > 1.0, "mobility.storm.arrival_multiplier", "> 1");
    ensure(
        errors,
        (0.0..=1.0).contains(&resumption_penalty),
        "mobility.storm.resumption_penalty",
        "in [0, 1]",
    );
    Some(StormParams { start_s, duration_s, arrival_multiplier, resumption_penalty })
}

fn validate_slice_budgets(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> SliceBudgets {
    const KEYS: &[&str] = &["urllc_ms", "embb_ms"];
    check_keys(obj, "slice_budgets.", KEYS, errors);
    let mut b = SliceBudgets::default();
    if let Some(v) = field_f64(obj, "slice_budgets.", "urllc_ms", errors) {
        ensure(errors, v > 0.0, "slice_budgets.urllc_ms", "> 0");
        b.urllc_ms = v;
    }
    if let Some(v) = field_f64(obj, "slice_budgets.", "embb_ms", errors) {
        ensure(errors, v > 0.0, "slice_budgets.embb_ms", "> 0");
        b.embb_ms = v;
    }
    ensure(errors, b.urllc_ms < b.embb_ms, "slice_budgets.urllc_ms", "< embb_ms");
    b
}

fn validate_topology(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> Option<Topology> {
    const KEYS: &[&str] = &["kind", "servers"];
    check_keys(obj, "topology.", KEYS, errors);
    match field_str(obj, "topology.", "kind", errors) {
        Some("shared_terminator") => {
            let servers = field_u64(obj, "topology.", "servers", errors).unwrap_or(1);
            ensure(errors, servers >= 1, "topology.servers", ">= 1");
            Some(Topology::SharedTerminator { servers: servers.min(u32::MAX as u64) as u32 })
        }
        Some("per_oru") => {
            if obj.contains_key("servers") {
                errors.push(ConfigError::UnknownKey("topology.servers".into()));
            }
            Some(Topology::PerOru)
        }
        Some(_) => {
            errors.push(ConfigError::OutOfRange {
                field: "topology.kind".into(),
                bound: "one of \"shared_terminator\", \"per_oru\"".into(),
            });
            None
        }
        None => {
            errors.push(ConfigError::MissingField("topology.kind".into()));
            None
        }
    }
}

fn validate_batching(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> BatchConfig {
    const KEYS: &[&str] = &["window_ms", "safety_margin_frac", "enabled"];
    check_keys(obj, "batching.", KEYS, errors);
    let mut b = BatchConfig::default();
    if let Some(v) = field_f64(obj, "batching.", "window_ms", errors) {
        ensure(errors, v > 0.0, "batching.window_ms", "> 0");
        b.window_ms = v;
    }
    if let Some(v) = field_f64(obj, "batching.", "safety_margin_frac", errors) {
        ensure(errors, v > 0.0 && v <= 1.0, "batching.safety_margin_frac", "in (0, 1]");
        b.safety_margin_frac = v;
    }
    if let Some(v) = field_bool(obj, "batching.", "enabled", errors) {
        b.enabled = v;
    }
    b
}

fn validate_shield(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> ShieldConfig {
    const KEYS: &[&str] =
        &["queue_residency_critical_ms", "storm_detect_multiplier", "control_cycle_ms"];
    check_keys(obj, "shield.", KEYS, errors);
    let mut s = ShieldConfig::default();
    if let Some(v) = field_f64(obj, "shield.", "queue_residency_critical_ms", errors) {
        ensure(errors, v > 0.0, "shield.queue_residency_critical_ms", "> 0");
        s.queue_residency_critical_ms = v;
    }
    if let Some(v) = field_f64(obj, "shield.", "storm_detect_multiplier", errors) {
        ensure(errors, v >= 1.0, "shield.storm_detect_multiplier", ">= 1");
        s.storm_detect_multiplier = v;
    }
    if let Some(v) = field_f64(obj, "shield.", "control_cycle_ms", errors) {
        ensure(errors, (100.0..=500.0).contains(&v), "shield.control_cycle_ms", "in [100, 500]");
        s.control_cycle_ms = v;
    }
    s
}

fn validate_accelerator(
    obj: &serde_json::Map<String, Value>,
    errors: &mut Vec<ConfigError>,
) -> Option<AccelConfig> {
    const KEYS: &[&str] = &["speedup", "per_op_overhead_mJ", "queue_depth_cap"];
    check_keys(obj, "accelerator.", KEYS, errors);
    let speedup = require_f64(obj, "accelerator.", "speedup", errors)?;
    ensure(errors, speedup > 1.0, "accelerator.speedup", "> 1");
    let per_op_overhead_mj =
        field_f64(obj, "accelerator.", "per_op_overhead_mJ", errors).unwrap_or(0.0);
    ensure(errors, per_op_overhead_mj >= 0.0, "accelerator.per_op_overhead_mJ", ">= 0");
    let queue_depth_cap = field_u64(obj, "accelerator.", "queue_depth_cap", errors).unwrap_or(4);
    ensure(errors, queue_depth_cap >= 1, "accelerator.queue_depth_cap", ">= 1");
    Some(AccelConfig {
        speedup,
        per_op_overhead_mj,
        queue_depth_cap: queue_depth_cap.min(u32::MAX as u64) as u32,
    })
}

fn check_keys(
    obj: &serde_json::Map<String, Value>,
    prefix: &str,
    allowed: &[&str],
    errors: &mut Vec<ConfigError>,
) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            errors.push(ConfigError::UnknownKey(format!("{prefix}{key}")));
        }
    }
}

fn ensure(errors: &mut Vec<ConfigError>, cond: bool, field: &str, bound: &str) {
    if !cond {
        errors.push(ConfigError::OutOfRange { field: field.into(), bound: bound.into() });
    }
}

/// Looks up a field, treating `null` as absent.
fn get<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn field_f64(
    obj: &serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<f64> {
    let v = get(obj, key)?;
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => {
            errors.push(ConfigError::WrongType {
                field: format!("{prefix}{key}"),
                expected: "finite number".into(),
            });
            None
        }
    }
}

fn require_f64(
    obj: &serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<f64> {
    if get(obj, key).is_none() {
        errors.push(ConfigError::MissingField(format!("{prefix}{key}")));
        return None;
    }
    field_f64(obj, prefix, key, errors)
}

fn field_u64(
    obj: &serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<u64> {
    let v = get(obj, key)?;
    match v.as_u64() {
        Some(x) => Some(x),
        None => {
            errors.push(ConfigError::WrongType {
                field: format!("{prefix}{key}"),
                expected: "unsigned integer".into(),
            });
            None
        }
    }
}

fn field_bool(
    obj: &serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<bool> {
    let v = get(obj, key)?;
    match v.as_bool() {
        Some(x) => Some(x),
        None => {
            errors.push(ConfigError::WrongType {
                field: format!("{prefix}{key}"),
                expected: "boolean".into(),
            });
            None
        }
    }
}

fn field_str<'a>(
    obj: &'a serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<&'a str> {
    let v = get(obj, key)?;
    match v.as_str() {
        Some(x) => Some(x),
        None => {
            errors.push(ConfigError::WrongType {
                field: format!("{prefix}{key}"),
                expected: "string".into(),
            });
            None
        }
    }
}

fn field_obj<'a>(
    obj: &'a serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<&'a serde_json::Map<String, Value>> {
    let v = get(obj, key)?;
    match v.as_object() {
        Some(x) => Some(x),
        None => {
            errors.push(ConfigError::WrongType {
                field: format!("{prefix}{key}"),
                expected: "object".into(),
            });
            None
        }
    }
}
