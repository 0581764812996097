//! Stochastic security-event stream: per-O-RU Poisson arrivals,
//! mobility-dependent full/resumed classification, and optional
//! handover-storm bursts.
//!
//! All randomness flows through [`SimRng`], a ChaCha8 counter-based
//! generator: the same seed produces the same stream on every platform
//! and across repeated runs. Per-O-RU substreams use the ChaCha stream
//! index so that generation order never perturbs the draws.

use crate::domain::{HandshakeKind, MobilityProfile, Scenario, SliceClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};

/// Stream index reserved for engine-side draws (service times).
pub const ENGINE_STREAM: u64 = u64::MAX;

/// Deterministic, seekable random source. Wraps ChaCha8 keyed by the
/// 64-bit scenario seed; `stream` selects an independent substream.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SimRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Bernoulli draw with probability `p` (clamped to [0, 1]).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p.clamp(0.0, 1.0)
    }

    /// Exponential draw with the given mean, via inverse CDF.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        -mean * (1.0 - self.uniform()).ln()
    }
}

/// One handshake request as generated by the workload model.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityEvent {
    pub id: u64,
    pub arrival_ms: f64,
    pub oru_id: u32,
    pub slice: SliceClass,
    pub kind: HandshakeKind,
    pub is_storm_period: bool,
}

/// Resolves an event's handshake kind at time `t_ms`: resumed with the
/// profile's (storm-penalized) probability, full otherwise.
pub fn classify_kind(rng: &mut SimRng, mobility: &MobilityProfile, t_ms: f64) -> HandshakeKind {
    let p = mobility.resumption_prob_at(t_ms);
    if p > 0.0 && rng.bernoulli(p) {
        HandshakeKind::Resumed
    } else {
        HandshakeKind::Full
    }
}

/// Observed mobility-event rate: `count` events over `window_ms`,
/// expressed in events per second.
pub fn mobility_rate(events_in_window: usize, window_ms: f64) -> f64 {
    events_in_window as f64 / window_ms * 1000.0
}

/// Generates the merged, arrival-ordered event stream for a scenario.
///
/// Each O-RU is an independent homogeneous Poisson process; a configured
/// storm window multiplies the rate piecewise (direct per-segment
/// sampling, no thinning). Event ids are assigned after the merge so
/// they are ordered by arrival.
pub fn generate_events(scenario: &Scenario, seed: u64) -> Vec<SecurityEvent> {
    let horizon_ms = scenario.horizon_ms();
    let base_rate = scenario.arrival_rate_per_oru_per_ms();
    if horizon_ms <= 0.0 || base_rate <= 0.0 {
        return Vec::new();
    }

    // Piecewise-constant rate segments over the horizon.
    let mut segments: Vec<(f64, f64, f64, bool)> = Vec::new(); // (start, end, rate, in_storm)
    match scenario.mobility.storm {
        Some(storm) => {
            let (s, e) = storm.window_ms();
            let s = s.clamp(0.0, horizon_ms);
            let e = e.clamp(0.0, horizon_ms);
            if s > 0.0 {
                segments.push((0.0, s, base_rate, false));
            }
            if e > s {
                segments.push((s, e, base_rate * storm.arrival_multiplier, true));
            }
            if horizon_ms > e {
                segments.push((e, horizon_ms, base_rate, false));
            }
        }
        None => segments.push((0.0, horizon_ms, base_rate, false)),
    }

    let mut events: Vec<SecurityEvent> = Vec::new();
    for oru_id in 0..scenario.n_orus {
        // Stream 0 is never used so the per-O-RU substreams stay disjoint
        // from any future master-stream use; the engine has its own.
        let mut rng = SimRng::new(seed, oru_id as u64 + 1);
        for &(start, end, rate, in_storm) in &segments {
            let mut t = start;
            loop {
                t += rng.exponential(1.0 / rate);
                if t >= end {
                    break;
                }
                let kind = classify_kind(&mut rng, &scenario.mobility, t);
                let slice = if scenario.urllc_share > 0.0 && rng.bernoulli(scenario.urllc_share) {
                    SliceClass::Urllc
                } else {
                    SliceClass::Embb
                };
                events.push(SecurityEvent {
                    id: 0,
                    arrival_ms: t,
                    oru_id,
                    slice,
                    kind,
                    is_storm_period: in_storm,
                });
            }
        }
    }

    events.sort_by(|a, b| {
        a.arrival_ms
            .total_cmp(&b.arrival_ms)
            .then(a.oru_id.cmp(&b.oru_id))
    });
    for (i, ev) in events.iter_mut().enumerate() {
        ev.id = i as u64;
    }
    events
}

/// Writes the event trace as CSV: `id,arrival_ms,oru_id,slice,kind,is_storm`.
pub fn write_event_csv<W: Write>(out: &mut W, events: &[SecurityEvent]) -> io::Result<()> {
    writeln!(out, "id,arrival_ms,oru_id,slice,kind,is_storm")?;
    for ev in events {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            ev.id, ev.arrival_ms, ev.oru_id, ev.slice, ev.kind, ev.is_storm_period
        )?;
    }
    Ok(())
}
