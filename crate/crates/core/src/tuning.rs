//! Gain selection for a requested settling time.
//!
//! Settling estimates come from the slowest mode: a mode whose root has
//! magnitude `r` decays to a fraction `band` of its initial size after
//! `ln(1/band) / ln(1/r)` samples. The classic rule of thumb replaces
//! `ln(1/0.02) ≈ 3.91` with 4; [`settling_time_estimate`] keeps that rule,
//! while tuning uses the exact band constant.

use serde::Serialize;

use crate::dynamics::{response_stats, ControllerConfig, DsrGains};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::network::PinnedLaplacian;
use crate::stability::{
    baseline_gamma_bound, baseline_report, dsr_beta_bound, dsr_bound_stable, spectral_radius,
};
use crate::trajectory::TrajectorySpec;

#[derive(Debug, Clone, Serialize)]
pub struct TuningSpec {
    /// Requested settling time in s.
    pub target_ts: f64,
    /// Acceptable commanded speed in cm/s.
    pub v_max: f64,
    pub dt: f64,
    /// Settling band as a fraction of the final value.
    pub band: f64,
    /// Reference used to measure speed and settling.
    pub reference: TrajectorySpec,
    /// Number of interior γ samples on `(0, γ̄)`.
    pub gamma_points: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    /// Number of interior β samples on `(0, β̄(α))` per α.
    pub beta_points: usize,
    /// Allowed distance (s) between a grid point's settling estimate and the target.
    pub ts_tolerance: f64,
    /// Step responses run for this multiple of the target settling time.
    pub horizon_factor: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl TuningSpec {
    pub fn new(target_ts: f64, v_max: f64, dt: f64) -> Self {
        TuningSpec {
            target_ts,
            v_max,
            dt,
            band: 0.02,
            reference: TrajectorySpec::unit_step(),
            gamma_points: 2000,
            alpha_min: 0.05,
            alpha_max: 2.0,
            alpha_step: 0.01,
            beta_points: 200,
            ts_tolerance: 0.25,
            horizon_factor: 4.0,
            exec: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.target_ts > 0.0 && self.target_ts.is_finite()) {
            problems.push(format!(
                "target settling time must be finite and > 0, got {}",
                self.target_ts
            ));
        }
        if self.v_max.is_nan() || self.v_max <= 0.0 {
            problems.push(format!("v_max must be > 0, got {}", self.v_max));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            problems.push(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.band > 0.0 && self.band < 1.0) {
            problems.push(format!("band must lie in (0, 1), got {}", self.band));
        }
        if self.gamma_points < 2 || self.beta_points < 1 {
            problems.push("grids need at least two gamma and one beta sample".into());
        }
        if !(self.alpha_min > 0.0 && self.alpha_max >= self.alpha_min && self.alpha_step > 0.0) {
            problems.push("alpha range must satisfy 0 < min <= max with a positive step".into());
        }
        match problems.is_empty() {
            true => Ok(()),
            false => Err(Error::InvalidTuning(problems.join("; "))),
        }
    }

    fn decay(&self) -> f64 {
        (1.0 / self.band).ln()
    }

    fn horizon(&self) -> f64 {
        self.horizon_factor * self.target_ts + self.reference.horizon(self.dt)
    }
}

/// Settling time of a mode with root magnitude `radius`: `−decay·δt / ln r`.
pub fn settling_from_radius(radius: f64, dt: f64, decay: f64) -> f64 {
    if radius >= 1.0 {
        f64::INFINITY
    } else if radius <= 0.0 {
        0.0
    } else {
        -decay * dt / radius.ln()
    }
}

fn gamma_radius(lap: &PinnedLaplacian, gamma: f64) -> f64 {
    lap.eigenvalues()
        .iter()
        .map(|l| (1.0 - gamma * l).abs())
        .fold(0.0, f64::max)
}

/// Rule-of-thumb estimate `T_s ≈ −4 δt / ln λ*`, `λ* = max_j |1 − γ λ_j|`.
pub fn settling_time_estimate(lap: &PinnedLaplacian, gamma: f64, dt: f64) -> Result<f64> {
    settling_estimate_with_decay(lap, gamma, dt, 4.0)
}

/// Same estimate with the exact band constant `ln(1/band)`.
pub fn settling_time_estimate_for_band(
    lap: &PinnedLaplacian,
    gamma: f64,
    dt: f64,
    band: f64,
) -> Result<f64> {
    settling_estimate_with_decay(lap, gamma, dt, (1.0 / band).ln())
}

fn settling_estimate_with_decay(
    lap: &PinnedLaplacian,
    gamma: f64,
    dt: f64,
    decay: f64,
) -> Result<f64> {
    let bound = baseline_gamma_bound(lap);
    if !(gamma > 0.0 && gamma < bound) {
        return Err(Error::UnstableGain { gamma, bound });
    }
    Ok(settling_from_radius(gamma_radius(lap, gamma), dt, decay))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningResult {
    pub controller: ControllerConfig,
    /// Settling time predicted from the dominant root (band constant).
    pub predicted_ts: f64,
    /// Settling time of the simulated step response.
    pub measured_ts: f64,
    pub max_speed: f64,
    /// The speed limit the result was checked against.
    pub speed_limit: f64,
    pub spectral_radius: f64,
    pub residual_radius: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaCurveRow {
    pub gamma: f64,
    /// Rule-of-thumb estimate (constant 4).
    pub ts_rule: f64,
    /// Band-constant estimate used for tuning.
    pub ts_band: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaTuning {
    pub result: TuningResult,
    pub curve: Vec<GammaCurveRow>,
}

/// Picks the smallest γ whose settling estimate equals the target.
///
/// The estimate falls from `+∞` at γ → 0 to a minimum at
/// `γ = 2/(λ_min + λ_max)` and rises again; only the first, slow-mode
/// branch is searched. The crossing is bracketed on the sampled curve and
/// then solved by bisection.
pub fn tune_gamma(lap: &PinnedLaplacian, spec: &TuningSpec) -> Result<GammaTuning> {
    spec.validate()?;
    let bound = baseline_gamma_bound(lap);
    let decay = spec.decay();
    let ts = |gamma: f64| settling_from_radius(gamma_radius(lap, gamma), spec.dt, decay);

    let gammas: Vec<f64> = (1..=spec.gamma_points)
        .map(|i| bound * i as f64 / (spec.gamma_points + 1) as f64)
        .collect();
    let curve: Vec<GammaCurveRow> = spec.exec.map(&gammas, |&gamma| GammaCurveRow {
        gamma,
        ts_rule: settling_from_radius(gamma_radius(lap, gamma), spec.dt, 4.0),
        ts_band: ts(gamma),
    });

    let target = spec.target_ts;
    let segment = curve
        .windows(2)
        .take_while(|w| w[1].ts_band <= w[0].ts_band)
        .find(|w| w[0].ts_band >= target && w[1].ts_band <= target);
    let Some(w) = segment else {
        let finite = curve.iter().map(|r| r.ts_band).filter(|t| t.is_finite());
        let (min, max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
            (lo.min(t), hi.max(t))
        });
        return Err(Error::UnreachableTarget { target, min, max });
    };

    let (mut lo, mut hi) = (w[0].gamma, w[1].gamma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ts(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let gamma = 0.5 * (lo + hi);

    let controller = ControllerConfig::baseline(gamma, spec.dt);
    let report = baseline_report(lap, gamma);
    let stats = response_stats(lap, &controller, &spec.reference, spec.horizon(), spec.band)?;
    let max_speed = stats.max_speed;
    Ok(GammaTuning {
        result: TuningResult {
            controller,
            predicted_ts: ts(gamma),
            measured_ts: stats.settling_time,
            max_speed,
            speed_limit: spec.v_max,
            spectral_radius: report.spectral_radius,
            residual_radius: report.residual_radius(),
            feasible: report.stable && max_speed <= spec.v_max,
        },
        curve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DsrGridRow {
    pub alpha: f64,
    pub beta: f64,
    pub spectral_radius: f64,
    pub residual_radius: f64,
    pub ts_estimate: f64,
    pub ts_measured: f64,
    pub max_speed: f64,
    pub bound_stable: bool,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DsrTuning {
    pub result: TuningResult,
    /// Best grid point before refinement.
    pub grid_best: DsrGridRow,
    pub grid: Vec<DsrGridRow>,
}

struct DsrObjective<'a> {
    lap: &'a PinnedLaplacian,
    spec: &'a TuningSpec,
}

impl DsrObjective<'_> {
    fn gains(&self, alpha: f64, beta: f64) -> DsrGains {
        DsrGains::new(alpha, beta)
    }

    fn radii(&self, alpha: f64, beta: f64) -> (f64, f64) {
        let report = spectral_radius(self.lap, &self.gains(alpha, beta), self.spec.dt);
        (report.spectral_radius, report.residual_radius())
    }

    fn ts_estimate(&self, alpha: f64, beta: f64) -> f64 {
        settling_from_radius(self.radii(alpha, beta).0, self.spec.dt, self.spec.decay())
    }

    fn evaluate(&self, alpha: f64, beta: f64, v_nodsr: f64) -> DsrGridRow {
        let (sigma, residual) = self.radii(alpha, beta);
        let ts_estimate = settling_from_radius(sigma, self.spec.dt, self.spec.decay());
        let bound_stable = dsr_bound_stable(self.lap, alpha, beta, self.spec.dt);
        let controller = ControllerConfig::dsr(alpha, beta, self.spec.dt);
        let (ts_measured, max_speed) = match response_stats(
            self.lap,
            &controller,
            &self.spec.reference,
            self.spec.horizon(),
            self.spec.band,
        ) {
            Ok(s) => (s.settling_time, s.max_speed),
            Err(_) => (f64::INFINITY, f64::INFINITY),
        };
        let feasible = bound_stable
            && sigma < 1.0
            && (ts_estimate - self.spec.target_ts).abs() <= self.spec.ts_tolerance
            && max_speed <= v_nodsr;
        DsrGridRow {
            alpha,
            beta,
            spectral_radius: sigma,
            residual_radius: residual,
            ts_estimate,
            ts_measured,
            max_speed,
            bound_stable,
            feasible,
        }
    }

    /// α in `[lo, hi]` with `ts_estimate(α, β) = target`, if bracketed.
    fn solve_alpha(&self, beta: f64, lo: f64, hi: f64) -> Option<f64> {
        let target = self.spec.target_ts;
        let f = |a: f64| self.ts_estimate(a, beta) - target;
        let (mut lo, mut hi) = (lo, hi);
        if f(lo) < 0.0 || f(hi) > 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Golden-section minimization of the residual radius over β.
    fn minimize_beta(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let g = |b: f64| self.radii(alpha, b).1;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..200 {
            if (b - a).abs() <= 1e-12 * b.abs() {
                break;
            }
            if gc <= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d);
            }
        }
        0.5 * (a + b)
    }
}

/// Selects DSR gains `(α, β)` for the requested settling time.
///
/// A grid point is feasible when it satisfies the closed-form stability
/// bound, its dominant-root settling estimate is within `ts_tolerance` of
/// the target, and its step response never commands more than `v_nodsr`.
/// On the settling constraint the spectral radius is pinned by the target,
/// so the remaining freedom is spent minimizing the residual radius (the
/// largest non-dominant root over all modes); ties go to the smaller β.
/// The best grid point is then refined: α is re-solved onto the exact
/// target, β is minimized by golden section within one grid cell, and α
/// is re-solved once more.
pub fn tune_dsr(lap: &PinnedLaplacian, spec: &TuningSpec, v_nodsr: f64) -> Result<DsrTuning> {
    spec.validate()?;
    if v_nodsr.is_nan() || v_nodsr <= 0.0 {
        return Err(Error::InvalidTuning(format!(
            "v_nodsr must be > 0, got {v_nodsr}"
        )));
    }
    let objective = DsrObjective { lap, spec };
    let alpha_count =
        ((spec.alpha_max - spec.alpha_min) / spec.alpha_step + 1e-9).floor() as usize + 1;
    let points: Vec<(f64, f64)> = (0..alpha_count)
        .flat_map(|i| {
            let alpha = spec.alpha_min + i as f64 * spec.alpha_step;
            let bound = dsr_beta_bound(lap, alpha, spec.dt);
            (1..=spec.beta_points)
                .map(move |j| (alpha, bound * j as f64 / (spec.beta_points + 1) as f64))
        })
        .collect();
    let grid = spec
        .exec
        .map(&points, |&(a, b)| objective.evaluate(a, b, v_nodsr));

    let mut best: Option<&DsrGridRow> = None;
    for row in grid.iter().filter(|r| r.feasible) {
        best = match best {
            None => Some(row),
            Some(cur) if row.residual_radius < cur.residual_radius - 1e-9 => Some(row),
            Some(cur)
                if (row.residual_radius - cur.residual_radius).abs() <= 1e-9
                    && row.beta < cur.beta =>
            {
                Some(row)
            }
            keep => keep,
        };
    }
    let Some(&grid_best) = best else {
        return Err(Error::NoFeasiblePoint(grid_summary(&grid, spec, v_nodsr)));
    };

    let alpha_lo = (grid_best.alpha - spec.alpha_step).max(spec.alpha_step * 1e-3);
    let alpha_hi = grid_best.alpha + spec.alpha_step;
    let mut alpha = objective
        .solve_alpha(grid_best.beta, alpha_lo, alpha_hi)
        .unwrap_or(grid_best.alpha);
    let cell = dsr_beta_bound(lap, alpha, spec.dt) / (spec.beta_points + 1) as f64;
    let beta_hi = (grid_best.beta + cell).min(dsr_beta_bound(lap, alpha, spec.dt) * (1.0 - 1e-9));
    let beta = objective.minimize_beta(alpha, (grid_best.beta - cell).max(cell * 1e-3), beta_hi);
    alpha = objective
        .solve_alpha(beta, alpha_lo, alpha_hi)
        .unwrap_or(alpha);

    let refined = objective.evaluate(alpha, beta, v_nodsr);
    let chosen = if refined.feasible { refined } else { grid_best };
    Ok(DsrTuning {
        result: TuningResult {
            controller: ControllerConfig::dsr(chosen.alpha, chosen.beta, spec.dt),
            predicted_ts: chosen.ts_estimate,
            measured_ts: chosen.ts_measured,
            max_speed: chosen.max_speed,
            speed_limit: v_nodsr,
            spectral_radius: chosen.spectral_radius,
            residual_radius: chosen.residual_radius,
            feasible: chosen.feasible,
        },
        grid_best,
        grid,
    })
}

fn grid_summary(grid: &[DsrGridRow], spec: &TuningSpec, v_nodsr: f64) -> String {
    let stable = grid.iter().filter(|r| r.bound_stable).count();
    let in_band = grid
        .iter()
        .filter(|r| (r.ts_estimate - spec.target_ts).abs() <= spec.ts_tolerance)
        .count();
    let slow_enough = grid.iter().filter(|r| r.max_speed <= v_nodsr).count();
    let (lo, hi) = grid
        .iter()
        .map(|r| r.ts_estimate)
        .filter(|t| t.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
            (lo.min(t), hi.max(t))
        });
    format!(
        "{} grid points: {stable} stable, {in_band} within {} s of T_s = {} s, {slow_enough} within speed limit {v_nodsr}; \
         settling estimates span [{lo}, {hi}] s",
        grid.len(),
        spec.ts_tolerance,
        spec.target_ts
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::StiffnessChain;

    const DT: f64 = 0.03;

    fn reference() -> PinnedLaplacian {
        PinnedLaplacian::from_chain(&StiffnessChain::reference_experiment()).unwrap()
    }

    fn single(k: f64) -> PinnedLaplacian {
        PinnedLaplacian::from_chain(&StiffnessChain::new(vec![], vec![k]).unwrap()).unwrap()
    }

    #[test]
    fn rule_of_thumb_at_reference_gain() {
        let ts = settling_time_estimate(&reference(), 1.93, DT).unwrap();
        assert!((ts - 10.0).abs() < 0.5, "{ts}");
    }

    #[test]
    fn forced_radius_gives_one_sample() {
        let lap = single(0.1);
        let gamma = (1.0 - (-4.0f64).exp()) / 0.1;
        let ts = settling_time_estimate(&lap, gamma, DT).unwrap();
        assert!((ts - DT).abs() < 1e-12);
    }

    #[test]
    fn deadbeat_gain_settles_instantly() {
        let lap = single(0.1);
        let half = baseline_gamma_bound(&lap) / 2.0;
        assert_eq!(settling_time_estimate(&lap, half, DT).unwrap(), 0.0);
    }

    #[test]
    fn unstable_gain_is_an_error() {
        let lap = reference();
        let bound = baseline_gamma_bound(&lap);
        assert!(matches!(
            settling_time_estimate(&lap, bound, DT),
            Err(Error::UnstableGain { .. })
        ));
        assert!(settling_time_estimate(&lap, 0.0, DT).is_err());
    }

    #[test]
    fn single_mode_gamma_is_exact() {
        let lambda = 0.05;
        let lap = single(lambda);
        let target = 7.5;
        let decay = 50f64.ln();
        let exact = (1.0 - (-decay * DT / target).exp()) / lambda;
        let tuned = tune_gamma(&lap, &TuningSpec::new(target, 5.0, DT)).unwrap();
        let gamma = match tuned.result.controller.law {
            crate::dynamics::ControlLaw::Baseline { gamma } => gamma,
            _ => unreachable!(),
        };
        assert!((gamma - exact).abs() < 1e-12 * exact, "{gamma} vs {exact}");
    }

    #[test]
    fn unreachable_targets() {
        let lap = reference();
        assert!(matches!(
            tune_gamma(&lap, &TuningSpec::new(f64::INFINITY, 5.0, DT)),
            Err(Error::InvalidTuning(_))
        ));
        assert!(matches!(
            tune_gamma(&lap, &TuningSpec::new(0.01, 5.0, DT)),
            Err(Error::UnreachableTarget { .. })
        ));
    }

    #[test]
    fn settling_from_radius_limits() {
        assert_eq!(settling_from_radius(1.0, DT, 4.0), f64::INFINITY);
        assert_eq!(settling_from_radius(0.0, DT, 4.0), 0.0);
    }

    #[test]
    fn infeasible_dsr_request_reports_grid() {
        let lap = reference();
        let mut spec = TuningSpec::new(10.0, 5.0, DT);
        spec.alpha_max = 0.2;
        spec.beta_points = 10;
        match tune_dsr(&lap, &spec, 3.0) {
            Err(Error::NoFeasiblePoint(msg)) => assert!(msg.contains("grid points")),
            other => panic!("expected NoFeasiblePoint, got {other:?}"),
        }
    }
}
