//! Reference trajectories `y_d[m]` for the virtual source.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryKind {
    Step,
    /// Step passed through a first-order low-pass filter with cutoff
    /// `omega_c` rad/s, discretized with the bilinear (Tustin) transform.
    FilteredStep {
        omega_c: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    /// Final value in cm.
    pub amplitude: f64,
    /// First sample at which the raw step is on.
    pub start_index: usize,
}

impl TrajectorySpec {
    pub fn step(amplitude: f64) -> Self {
        TrajectorySpec {
            kind: TrajectoryKind::Step,
            amplitude,
            start_index: 1,
        }
    }

    pub fn unit_step() -> Self {
        Self::step(1.0)
    }

    pub fn filtered_step(amplitude: f64, omega_c: f64) -> Self {
        TrajectorySpec {
            kind: TrajectoryKind::FilteredStep { omega_c },
            amplitude,
            start_index: 1,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        TrajectorySpec { amplitude, ..self }
    }

    pub fn violations(&self, dt: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !self.amplitude.is_finite() {
            out.push(format!("amplitude must be finite, got {}", self.amplitude));
        }
        if let TrajectoryKind::FilteredStep { omega_c } = self.kind {
            if !(omega_c > 0.0 && omega_c.is_finite()) {
                out.push(format!("omega_c must be > 0, got {omega_c}"));
            } else if omega_c * dt >= 2.0 {
                out.push(format!(
                    "omega_c * dt must be < 2 for the Tustin filter, got {}",
                    omega_c * dt
                ));
            }
        }
        out
    }

    pub fn validate(&self, dt: f64) -> Result<()> {
        match self.violations(dt).into_iter().next() {
            Some(msg) => Err(Error::InvalidTrajectory(msg)),
            None => Ok(()),
        }
    }

    /// Time after which the reference is essentially at its final value:
    /// the step instant, plus `4 / ω_c` for the filtered step.
    pub fn horizon(&self, dt: f64) -> f64 {
        let onset = self.start_index as f64 * dt;
        match self.kind {
            TrajectoryKind::Step => onset,
            TrajectoryKind::FilteredStep { omega_c } => onset + 4.0 / omega_c,
        }
    }

    pub fn final_value(&self) -> f64 {
        self.amplitude
    }

    pub fn generator(&self, dt: f64) -> ReferenceGenerator {
        ReferenceGenerator::new(*self, dt)
    }

    /// `y_d[0..len]`.
    pub fn samples(&self, dt: f64, len: usize) -> Vec<f64> {
        self.generator(dt).take(len).collect()
    }
}

/// Streams `y_d[0], y_d[1], …`.
///
/// The filter starts at rest on its input, so `y_d[0] = y_ds[0]`: zero for a
/// step that switches on later, the amplitude for one already on at `m = 0`.
#[derive(Debug, Clone)]
pub struct ReferenceGenerator {
    spec: TrajectorySpec,
    pole: f64,
    feed: f64,
    step: usize,
    last_output: f64,
    last_input: f64,
}

impl ReferenceGenerator {
    fn new(spec: TrajectorySpec, dt: f64) -> Self {
        let (pole, feed) = match spec.kind {
            TrajectoryKind::Step => (0.0, 0.0),
            TrajectoryKind::FilteredStep { omega_c } => {
                let w = omega_c * dt;
                ((2.0 - w) / (2.0 + w), w / (2.0 + w))
            }
        };
        ReferenceGenerator {
            spec,
            pole,
            feed,
            step: 0,
            last_output: 0.0,
            last_input: 0.0,
        }
    }

    fn raw(&self, m: usize) -> f64 {
        if m >= self.spec.start_index {
            self.spec.amplitude
        } else {
            0.0
        }
    }
}

impl Iterator for ReferenceGenerator {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let m = self.step;
        let input = self.raw(m);
        let output = match self.spec.kind {
            TrajectoryKind::Step => input,
            TrajectoryKind::FilteredStep { .. } if m == 0 => input,
            TrajectoryKind::FilteredStep { .. } => {
                self.pole * self.last_output + self.feed * (input + self.last_input)
            }
        };
        self.last_output = output;
        self.last_input = input;
        self.step += 1;
        Some(output)
    }
}

/// `y_d[m]` for a single index.
pub fn filtered_step(spec: &TrajectorySpec, dt: f64, m: usize) -> f64 {
    spec.generator(dt).nth(m).expect("generator is infinite")
}

/// One row of the cutoff-frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega_c: f64,
    pub max_deformation: f64,
    pub max_speed: f64,
}

/// Default sweep grid: 0.02, 0.04, …, 0.5 rad/s.
pub fn default_cutoff_grid() -> Vec<f64> {
    (1..=25).map(|i| i as f64 * 0.02).collect()
}

/// Simulates the template once per cutoff frequency.
///
/// The run length keeps the template's settling margin after the filtered
/// reference has arrived: `duration − horizon(template) + 4/ω_c`, and never
/// less than the template duration. Rows come back sorted by `ω_c`.
pub fn cutoff_sweep(
    template: &crate::config::ScenarioConfig,
    omegas: &[f64],
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    let mut omegas = omegas.to_vec();
    omegas.sort_by(f64::total_cmp);
    let dt = template.controller.dt;
    let margin = (template.duration - template.trajectory.horizon(dt)).max(0.0);
    exec.try_map(&omegas, |&omega_c| {
        let mut scenario = template.clone();
        scenario.trajectory.kind = TrajectoryKind::FilteredStep { omega_c };
        scenario.trajectory.validate(dt)?;
        scenario.duration = template
            .duration
            .max(scenario.trajectory.horizon(dt) + margin);
        let trace = crate::dynamics::simulate(&scenario)?;
        let summary = crate::metrics::summarize(&trace, None);
        Ok(SweepRow {
            omega_c,
            max_deformation: summary.max_deformation,
            max_speed: summary.max_speed,
        })
    })
}
