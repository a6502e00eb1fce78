//! Discrete-time network updates and the simulation loop.
//!
//! Every update law exists in two forms: the per-robot form each robot
//! actually runs (own position, own force sensor, and `y_d` only for
//! leaders) and the stacked matrix form used for analysis. The per-robot
//! form drives the simulation; in debug builds each step is cross-checked
//! against the matrix form.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::SettlingTracker;
use crate::network::PinnedLaplacian;
use crate::trajectory::TrajectorySpec;

/// Positions beyond this magnitude (cm) count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Tolerance of the local/matrix agreement check, relative to the larger of
/// 1 and the magnitude of the compared values.
pub const FORM_AGREEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsrGains {
    /// 1/s
    pub alpha: f64,
    /// cm/N
    pub beta: f64,
    /// Self-reinforcement delay in samples, `τ = N δt`.
    pub delay: usize,
}

impl DsrGains {
    pub fn new(alpha: f64, beta: f64) -> Self {
        DsrGains {
            alpha,
            beta,
            delay: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlLaw {
    Baseline { gamma: f64 },
    Dsr(DsrGains),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub law: ControlLaw,
    /// Sampling period in s.
    pub dt: f64,
}

impl ControllerConfig {
    pub fn baseline(gamma: f64, dt: f64) -> Self {
        ControllerConfig {
            law: ControlLaw::Baseline { gamma },
            dt,
        }
    }

    pub fn dsr(alpha: f64, beta: f64, dt: f64) -> Self {
        ControllerConfig {
            law: ControlLaw::Dsr(DsrGains::new(alpha, beta)),
            dt,
        }
    }

    /// Each violation as `(field, message)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(("dt", format!("must be > 0, got {}", self.dt)));
        }
        match self.law {
            ControlLaw::Baseline { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    out.push(("gamma", format!("must be > 0, got {gamma}")));
                }
            }
            ControlLaw::Dsr(g) => {
                if !(g.alpha > 0.0 && g.alpha.is_finite()) {
                    out.push(("alpha", format!("must be > 0, got {}", g.alpha)));
                }
                if !(g.beta > 0.0 && g.beta.is_finite()) {
                    out.push(("beta", format!("must be > 0, got {}", g.beta)));
                }
                if g.delay < 1 {
                    out.push(("delay_multiple", "must be >= 1".to_string()));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((field, msg)) => Err(Error::InvalidController(format!("{field} {msg}"))),
            None => Ok(()),
        }
    }

    /// Length of the delay buffer the law needs.
    pub fn delay(&self) -> usize {
        match self.law {
            ControlLaw::Baseline { .. } => 1,
            ControlLaw::Dsr(g) => g.delay,
        }
    }

    /// Per-robot update for the current state.
    pub fn next_positions(
        &self,
        state: &NetworkState,
        lap: &PinnedLaplacian,
        reference: f64,
    ) -> Vec<f64> {
        match self.law {
            ControlLaw::Baseline { gamma } => step_baseline(state, lap, gamma, reference),
            ControlLaw::Dsr(gains) => step_dsr(state, lap, &gains, self.dt, reference),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    positions: Vec<f64>,
    forces: Vec<f64>,
}

/// Current positions and forces plus the last `N` of each.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    step: usize,
    current: Snapshot,
    // oldest first; front is sample m − N
    history: VecDeque<Snapshot>,
}

impl NetworkState {
    /// Starts at `initial` with the whole delay buffer equal to it, i.e. the
    /// network has been sitting still.
    pub fn at_rest(lap: &PinnedLaplacian, initial: Vec<f64>, delay: usize) -> Self {
        assert_eq!(initial.len(), lap.len(), "one position per robot");
        let delay = delay.max(1);
        let forces = lap.graph().measured_forces(&initial);
        let current = Snapshot {
            positions: initial,
            forces,
        };
        NetworkState {
            step: 0,
            history: std::iter::repeat_n(current.clone(), delay).collect(),
            current,
        }
    }

    /// State with an explicit delayed sample `Y[m − N]` (all older buffer
    /// entries are set to it).
    pub fn with_history(
        lap: &PinnedLaplacian,
        positions: Vec<f64>,
        delayed: Vec<f64>,
        delay: usize,
    ) -> Self {
        let mut state = Self::at_rest(lap, positions, delay);
        let forces = lap.graph().measured_forces(&delayed);
        for snap in state.history.iter_mut() {
            *snap = Snapshot {
                positions: delayed.clone(),
                forces: forces.clone(),
            };
        }
        state
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn positions(&self) -> &[f64] {
        &self.current.positions
    }

    pub fn forces(&self) -> &[f64] {
        &self.current.forces
    }

    pub fn delayed_positions(&self) -> &[f64] {
        &self
            .history
            .front()
            .expect("delay buffer is never empty")
            .positions
    }

    pub fn delayed_forces(&self) -> &[f64] {
        &self
            .history
            .front()
            .expect("delay buffer is never empty")
            .forces
    }

    pub fn delay(&self) -> usize {
        self.history.len()
    }

    pub fn advance(&mut self, lap: &PinnedLaplacian, next: Vec<f64>) {
        let forces = lap.graph().measured_forces(&next);
        let previous = std::mem::replace(
            &mut self.current,
            Snapshot {
                positions: next,
                forces,
            },
        );
        self.history.push_back(previous);
        self.history.pop_front();
        self.step += 1;
    }
}

/// `y_k − γ (f_k + k_kd (y_k − y_d))` for every robot.
pub fn baseline_update_local(
    lap: &PinnedLaplacian,
    positions: &[f64],
    forces: &[f64],
    gamma: f64,
    reference: f64,
) -> Vec<f64> {
    let graph = lap.graph();
    (0..lap.len())
        .map(|k| {
            let augmented = forces[k] + graph.virtual_force(positions, k, reference);
            positions[k] - gamma * augmented
        })
        .collect()
}

/// `(I − γK) Y + γ B y_d`.
pub fn baseline_update_matrix(
    lap: &PinnedLaplacian,
    positions: &[f64],
    gamma: f64,
    reference: f64,
) -> Vec<f64> {
    let ky = lap.apply(positions);
    let b = lap.leader_vector();
    (0..lap.len())
        .map(|k| positions[k] - gamma * ky[k] + gamma * b[k] * reference)
        .collect()
}

/// Per-robot DSR update. Robot `k` uses only its own current and delayed
/// position and force readings, and `y_d` when it is a leader:
///
/// ```text
/// y_k[m+1] = y_k[m] − c f_k[m] + c k_kd (y_d[m] − y_k[m])
///          + ((1 − β k_kd)(y_k[m] − y_k[m−N]) − β (f_k[m] − f_k[m−N])) / N
/// ```
///
/// with `c = α β δt`.
#[allow(clippy::too_many_arguments)]
pub fn dsr_update_local(
    lap: &PinnedLaplacian,
    positions: &[f64],
    delayed_positions: &[f64],
    forces: &[f64],
    delayed_forces: &[f64],
    gains: &DsrGains,
    dt: f64,
    reference: f64,
) -> Vec<f64> {
    let c = gains.alpha * gains.beta * dt;
    let inv_n = 1.0 / gains.delay as f64;
    let pins = lap.graph().leader_stiffness();
    (0..lap.len())
        .map(|k| {
            let y = positions[k];
            let kd = pins[k];
            let reinforcement = (1.0 - gains.beta * kd) * (y - delayed_positions[k])
                - gains.beta * (forces[k] - delayed_forces[k]);
            y - c * forces[k] + c * kd * (reference - y) + inv_n * reinforcement
        })
        .collect()
}

/// `Y − cKY + cB y_d + (I − βK)(Y − Y[m−N]) / N`.
pub fn dsr_update_matrix(
    lap: &PinnedLaplacian,
    positions: &[f64],
    delayed_positions: &[f64],
    gains: &DsrGains,
    dt: f64,
    reference: f64,
) -> Vec<f64> {
    let c = gains.alpha * gains.beta * dt;
    let inv_n = 1.0 / gains.delay as f64;
    let diff: Vec<f64> = positions
        .iter()
        .zip(delayed_positions)
        .map(|(a, b)| a - b)
        .collect();
    let ky = lap.apply(positions);
    let kdiff = lap.apply(&diff);
    let b = lap.leader_vector();
    (0..lap.len())
        .map(|k| {
            positions[k] - c * ky[k]
                + c * b[k] * reference
                + inv_n * (diff[k] - gains.beta * kdiff[k])
        })
        .collect()
}

pub fn forms_agree(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= FORM_AGREEMENT_TOL * 1f64.max(x.abs()).max(y.abs()))
}

pub fn step_baseline(
    state: &NetworkState,
    lap: &PinnedLaplacian,
    gamma: f64,
    reference: f64,
) -> Vec<f64> {
    let next = baseline_update_local(lap, state.positions(), state.forces(), gamma, reference);
    debug_assert!(
        forms_agree(
            &next,
            &baseline_update_matrix(lap, state.positions(), gamma, reference)
        ),
        "per-robot and matrix baseline updates disagree at step {}",
        state.step()
    );
    next
}

pub fn step_dsr(
    state: &NetworkState,
    lap: &PinnedLaplacian,
    gains: &DsrGains,
    dt: f64,
    reference: f64,
) -> Vec<f64> {
    debug_assert_eq!(
        state.delay(),
        gains.delay,
        "delay buffer length must match the DSR delay"
    );
    let next = dsr_update_local(
        lap,
        state.positions(),
        state.delayed_positions(),
        state.forces(),
        state.delayed_forces(),
        gains,
        dt,
        reference,
    );
    debug_assert!(
        forms_agree(
            &next,
            &dsr_update_matrix(
                lap,
                state.positions(),
                state.delayed_positions(),
                gains,
                dt,
                reference
            )
        ),
        "per-robot and matrix DSR updates disagree at step {}",
        state.step()
    );
    next
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub time: f64,
    pub positions: Vec<f64>,
    /// Neighbor forces read by the robots' sensors.
    pub forces: Vec<f64>,
    /// Neighbor force plus the virtual-source force.
    pub augmented_forces: Vec<f64>,
    pub reference: f64,
    /// Commanded speeds `(y_k[m+1] − y_k[m]) / δt`.
    pub speeds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub dt: f64,
    pub robots: usize,
    pub rows: Vec<TraceRow>,
    /// Whether the controller passed the stability check before the run.
    pub stable: bool,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_positions(&self) -> &[f64] {
        &self.rows.last().expect("non-empty trace").positions
    }
}

/// Number of steps covering `duration`, guarding against `60/0.03` landing a
/// hair above an integer.
pub fn step_count(duration: f64, dt: f64) -> usize {
    (duration / dt - 1e-9).ceil().max(0.0) as usize
}

fn check_finite(positions: &[f64], step: usize) -> Result<()> {
    if positions
        .iter()
        .all(|y| y.is_finite() && y.abs() <= DIVERGENCE_LIMIT)
    {
        Ok(())
    } else {
        Err(Error::Diverged { step })
    }
}

/// Runs a scenario from rest at the origin. Rows cover `m = 0 … M` with
/// `M = ⌈duration/δt⌉`; the command issued at `M` is computed so that the
/// last row also carries speeds.
pub fn simulate(scenario: &ScenarioConfig) -> Result<SimulationTrace> {
    let lap = scenario.network.laplacian()?;
    simulate_on(
        &lap,
        &scenario.controller,
        &scenario.trajectory,
        scenario.duration,
    )
}

pub fn simulate_on(
    lap: &PinnedLaplacian,
    controller: &ControllerConfig,
    trajectory: &TrajectorySpec,
    duration: f64,
) -> Result<SimulationTrace> {
    controller.validate()?;
    trajectory.validate(controller.dt)?;
    let stable = crate::stability::controller_report(lap, controller).stable;
    if !stable {
        log::warn!(
            "controller {:?} is not stable on this network; running anyway",
            controller.law
        );
    }

    let n = lap.len();
    let dt = controller.dt;
    let steps = step_count(duration, dt);
    let graph = lap.graph();
    let mut state = NetworkState::at_rest(lap, vec![0.0; n], controller.delay());
    let mut reference = trajectory.generator(dt);
    let mut rows = Vec::with_capacity(steps + 1);

    for m in 0..=steps {
        let yd = reference.next().expect("generator is infinite");
        let next = controller.next_positions(&state, lap, yd);
        check_finite(&next, m + 1)?;
        let positions = state.positions().to_vec();
        let forces = state.forces().to_vec();
        let augmented_forces = (0..n)
            .map(|k| forces[k] + graph.virtual_force(&positions, k, yd))
            .collect();
        let speeds = next
            .iter()
            .zip(&positions)
            .map(|(a, b)| (a - b) / dt)
            .collect();
        rows.push(TraceRow {
            time: m as f64 * dt,
            positions,
            forces,
            augmented_forces,
            reference: yd,
            speeds,
        });
        state.advance(lap, next);
    }

    Ok(SimulationTrace {
        dt,
        robots: n,
        rows,
        stable,
    })
}

/// Summary of a response computed without storing a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseStats {
    pub max_speed: f64,
    pub max_deformation: f64,
    /// Network settling time in s; `+∞` if still outside the band at the end.
    pub settling_time: f64,
    /// `max_k |y_k − y_d|` at the last sample.
    pub final_error: f64,
}

/// Matrix-form run used by grid searches; same update as [`simulate_on`]
/// but allocation-free per step and without the per-robot cross-check.
pub fn response_stats(
    lap: &PinnedLaplacian,
    controller: &ControllerConfig,
    trajectory: &TrajectorySpec,
    duration: f64,
    band: f64,
) -> Result<ResponseStats> {
    let n = lap.len();
    let dt = controller.dt;
    let steps = step_count(duration, dt);
    let k: Vec<f64> = (0..n * n).map(|i| lap.matrix()[(i / n, i % n)]).collect();
    let b: Vec<f64> = lap.leader_vector().iter().copied().collect();
    let (c, beta, inv_n, delay, dsr) = match controller.law {
        ControlLaw::Baseline { gamma } => (gamma, 0.0, 0.0, 1, false),
        ControlLaw::Dsr(g) => (
            g.alpha * g.beta * dt,
            g.beta,
            1.0 / g.delay as f64,
            g.delay,
            true,
        ),
    };

    let mut y = vec![0.0; n];
    let mut ky = vec![0.0; n];
    let mut next = vec![0.0; n];
    // ring buffers of past Y and KY
    let mut past_y: VecDeque<Vec<f64>> = std::iter::repeat_n(vec![0.0; n], delay).collect();
    let mut past_ky: VecDeque<Vec<f64>> = std::iter::repeat_n(vec![0.0; n], delay).collect();
    let mut reference = trajectory.generator(dt);
    let mut tracker = SettlingTracker::new(trajectory.final_value(), band);
    let mut max_speed: f64 = 0.0;
    let mut max_deformation: f64 = 0.0;
    let mut final_error = 0.0;

    for m in 0..=steps {
        let yd = reference.next().expect("generator is infinite");
        for i in 0..n {
            ky[i] = (0..n).map(|j| k[i * n + j] * y[j]).sum();
        }
        let yp = past_y.front().expect("non-empty");
        let kyp = past_ky.front().expect("non-empty");
        for i in 0..n {
            let mut v = y[i] - c * ky[i] + c * b[i] * yd;
            if dsr {
                v += inv_n * ((y[i] - yp[i]) - beta * (ky[i] - kyp[i]));
            }
            next[i] = v;
        }
        check_finite(&next, m + 1)?;

        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        max_deformation = max_deformation.max(hi - lo);
        for i in 0..n {
            max_speed = max_speed.max(((next[i] - y[i]) / dt).abs());
        }
        tracker.observe(m as f64 * dt, &y);
        if m == steps {
            final_error = y.iter().map(|v| (v - yd).abs()).fold(0.0, f64::max);
        }

        let mut oldest_y = past_y.pop_front().expect("non-empty");
        oldest_y.copy_from_slice(&y);
        past_y.push_back(oldest_y);
        let mut oldest_ky = past_ky.pop_front().expect("non-empty");
        oldest_ky.copy_from_slice(&ky);
        past_ky.push_back(oldest_ky);
        std::mem::swap(&mut y, &mut next);
    }

    Ok(ResponseStats {
        max_speed,
        max_deformation,
        settling_time: tracker.settling_time(),
        final_error,
    })
}
