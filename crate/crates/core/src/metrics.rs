//! Cohesion and effort metrics computed from simulation traces.

use serde::Serialize;

use crate::dynamics::SimulationTrace;

/// Default settling band: ±2 % of the final value.
pub const DEFAULT_BAND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// Maximum deformation `D̄` in cm.
    pub max_deformation: f64,
    /// Maximum absolute neighbor force `f̄` in N.
    pub max_force: f64,
    /// Maximum commanded speed in cm/s.
    pub max_speed: f64,
    /// Network settling time in s (`+∞` if never settled); absent when the
    /// reference has no nonzero final value.
    pub settling_time: Option<f64>,
    #[serde(skip)]
    pub deformation: Vec<f64>,
}

/// `D[m] = max_k y_k[m] − min_k y_k[m]`.
pub fn deformation(positions: &[f64]) -> f64 {
    let (lo, hi) = positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if positions.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

pub fn deformation_series(trace: &SimulationTrace) -> Vec<f64> {
    trace
        .rows
        .iter()
        .map(|r| deformation(&r.positions))
        .collect()
}

pub fn max_deformation(trace: &SimulationTrace) -> f64 {
    deformation_series(trace).into_iter().fold(0.0, f64::max)
}

/// Largest `|f_k[m]|` over robots and samples (sensor forces only).
pub fn max_force(trace: &SimulationTrace) -> f64 {
    trace
        .rows
        .iter()
        .flat_map(|r| r.forces.iter())
        .fold(0.0, |m, f| m.max(f.abs()))
}

pub fn max_speed(trace: &SimulationTrace) -> f64 {
    trace
        .rows
        .iter()
        .flat_map(|r| r.speeds.iter())
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Tracks the last time any robot sits outside `final_value·(1 ± band)`.
#[derive(Debug, Clone)]
pub struct SettlingTracker {
    final_value: f64,
    half_width: f64,
    last_outside: Option<f64>,
    last_seen: Option<f64>,
}

impl SettlingTracker {
    pub fn new(final_value: f64, band: f64) -> Self {
        SettlingTracker {
            final_value,
            half_width: band * final_value.abs(),
            last_outside: None,
            last_seen: None,
        }
    }

    pub fn observe(&mut self, time: f64, positions: &[f64]) {
        if positions
            .iter()
            .any(|y| (y - self.final_value).abs() > self.half_width)
        {
            self.last_outside = Some(time);
        }
        self.last_seen = Some(time);
    }

    /// 0 if never outside, `+∞` if still outside at the last sample.
    pub fn settling_time(&self) -> f64 {
        match self.last_outside {
            None => 0.0,
            Some(t) if Some(t) == self.last_seen => f64::INFINITY,
            Some(t) => t,
        }
    }
}

pub fn measured_settling_time(trace: &SimulationTrace, final_value: f64, band: f64) -> f64 {
    let mut tracker = SettlingTracker::new(final_value, band);
    for row in &trace.rows {
        tracker.observe(row.time, &row.positions);
    }
    tracker.settling_time()
}

pub fn summarize(trace: &SimulationTrace, final_value: Option<f64>) -> RunSummary {
    let deformation = deformation_series(trace);
    RunSummary {
        max_deformation: deformation.iter().copied().fold(0.0, f64::max),
        max_force: max_force(trace),
        max_speed: max_speed(trace),
        settling_time: final_value
            .filter(|v| *v != 0.0)
            .map(|v| measured_settling_time(trace, v, DEFAULT_BAND)),
        deformation,
    }
}

/// Percentage reductions achieved by the cohesive run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Improvement {
    pub deformation_pct: f64,
    pub force_pct: f64,
}

pub fn improvement(baseline: &RunSummary, dsr: &RunSummary) -> Improvement {
    let pct = |base: f64, new: f64| 100.0 * (1.0 - new / base);
    Improvement {
        deformation_pct: pct(baseline.max_deformation, dsr.max_deformation),
        force_pct: pct(baseline.max_force, dsr.max_force),
    }
}
