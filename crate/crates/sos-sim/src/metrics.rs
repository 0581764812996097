//! Aggregation of completion records into reported quantities: mean and
//! relative energy, latency percentiles (nearest rank), SLA compliance,
//! and latency CDF point sets.

use crate::domain::Scenario;
use crate::engine::CompletionRecord;
use serde::Serialize;
use std::io::{self, Write};

/// Maximum CDF points carried in a summary; exports can request full
/// resolution explicitly.
pub const CDF_MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("quantile {0} outside (0, 1)")]
    QuantileOutOfRange(String),
}

/// Nearest-rank percentile: sort ascending and take the element at
/// 1-based index `ceil(q * n)`. The result is always an observed value,
/// which keeps deterministic-service percentiles on actual latencies
/// (interpolating methods would shift them by fractions of a service
/// time).
pub fn percentile(values: &[f64], q: f64) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(MetricsError::QuantileOutOfRange(format!("{q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.max(1) - 1])
}

/// Fraction of latencies at or below the threshold.
pub fn sla_compliance(latencies: &[f64], threshold_ms: f64) -> Result<f64, MetricsError> {
    if latencies.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ok = latencies.iter().filter(|&&l| l <= threshold_ms).count();
    Ok(ok as f64 / latencies.len() as f64)
}

/// Empirical CDF: sorted unique latencies paired with cumulative
/// fractions. The final point is exactly (max latency, 1.0).
pub fn cdf_points(latencies: &[f64]) -> Result<Vec<(f64, f64)>, MetricsError> {
    if latencies.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sorted = latencies.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut seen = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        seen += j - i;
        points.push((v, seen as f64 / n));
        i = j;
    }
    Ok(points)
}

/// Cumulative fraction at a latency value, from a CDF point set.
pub fn cdf_at(points: &[(f64, f64)], latency_ms: f64) -> f64 {
    let mut frac = 0.0;
    for &(l, f) in points {
        if l <= latency_ms {
            frac = f;
        } else {
            break;
        }
    }
    frac
}

/// Thins a CDF to at most `max_points` by even rank selection, always
/// keeping the first and final points.
pub fn downsample_cdf(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points || max_points < 2 {
        return points.to_vec();
    }
    let last = points.len() - 1;
    let mut out = Vec::with_capacity(max_points);
    let mut prev = usize::MAX;
    for k in 0..max_points {
        let idx = (k as f64 / (max_points - 1) as f64 * last as f64).round() as usize;
        if idx != prev {
            out.push(points[idx]);
            prev = idx;
        }
    }
    out
}

/// Aggregate metrics for one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub n_events: usize,
    pub n_full: usize,
    pub n_resumed: usize,
    #[serde(rename = "mean_energy_mJ")]
    pub mean_energy_mj: f64,
    pub relative_energy: f64,
    pub p95_ms: f64,
    pub sla_compliance_frac: f64,
    #[serde(rename = "total_energy_J")]
    pub total_energy_j: f64,
    pub cdf: Vec<(f64, f64)>,
}

/// Builds the summary for a completed run. Relative energy is
/// normalized to the analytic zero-resumption baseline, i.e. the cost
/// model's full-handshake energy.
pub fn summarize(
    records: &[CompletionRecord],
    scenario: &Scenario,
) -> Result<ScenarioSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut n_full = 0usize;
    let mut n_resumed = 0usize;
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    let mut latencies = Vec::with_capacity(records.len());
    for r in records {
        match r.kind {
            crate::domain::HandshakeKind::Full => n_full += 1,
            crate::domain::HandshakeKind::Resumed => n_resumed += 1,
        }
        // Kahan summation keeps the mean at exact-bookkeeping precision.
        let y = r.energy_mj - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
        latencies.push(r.latency_ms());
    }
    let n = records.len();
    let mean = total / n as f64;
    let cdf = downsample_cdf(&cdf_points(&latencies)?, CDF_MAX_POINTS);
    Ok(ScenarioSummary {
        n_events: n,
        n_full,
        n_resumed,
        mean_energy_mj: mean,
        relative_energy: mean / scenario.cost_model.full_energy_mj,
        p95_ms: percentile(&latencies, 0.95)?,
        sla_compliance_frac: sla_compliance(&latencies, scenario.sla_ms)?,
        total_energy_j: total / 1000.0,
        cdf,
    })
}

/// Writes a summary as JSON with stable field order.
pub fn write_summary_json<W: Write>(out: &mut W, summary: &ScenarioSummary) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, summary)?;
    writeln!(out)
}

/// Writes CDF points as CSV: `latency_ms,cum_frac`.
pub fn write_cdf_csv<W: Write>(out: &mut W, points: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "latency_ms,cum_frac")?;
    for (l, f) in points {
        writeln!(out, "{l},{f}")?;
    }
    Ok(())
}

/// One row of a resumption sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub scenario: String,
    pub p_resume: f64,
    pub relative_energy: f64,
    pub p95_ms: f64,
    pub sla_compliance: f64,
}

/// Writes the sweep table: `scenario,p_resume,relative_energy,p95_ms,sla_compliance`.
pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "scenario,p_resume,relative_energy,p95_ms,sla_compliance")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.scenario, r.p_resume, r.relative_energy, r.p95_ms, r.sla_compliance
        )?;
    }
    Ok(())
}
