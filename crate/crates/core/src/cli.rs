//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::config::{load_config, ScenarioConfig};
use crate::dynamics::{simulate, simulate_on, ControlLaw};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{improvement, summarize, Improvement, RunSummary};
use crate::network::PinnedLaplacian;
use crate::output::{
    fmt_g, write_dsr_grid, write_gamma_curve, write_json, write_sweep, write_trace,
};
use crate::stability::{baseline_gamma_bound, controller_report, dsr_beta_bound, StabilityReport};
use crate::trajectory::{cutoff_sweep, default_cutoff_grid};
use crate::tuning::{tune_dsr, tune_gamma, TuningResult, TuningSpec};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_ACCEPTANCE: u8 = 4;

/// Reference values for the simulated scenarios.
pub const BASELINE_FORCE: f64 = 0.146;
pub const BASELINE_DEFORMATION: f64 = 5.824;
pub const DSR_FORCE: f64 = 0.014;
pub const DSR_DEFORMATION: f64 = 0.563;
pub const MIN_IMPROVEMENT_PCT: f64 = 88.0;
pub const SPEED_LIMIT: f64 = 5.0;

#[derive(Debug, Parser)]
#[command(
    name = "cohesive-transport",
    version,
    about = "Cohesive transport of flexible objects by robot networks"
)]
pub struct Cli {
    /// Run grids and sweeps on a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario TOML; defaults to the bundled DSR scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trace and summary.
    Simulate(Common),
    /// Pick γ and (α, β) for a settling-time target.
    Tune {
        #[command(flatten)]
        common: Common,
        /// Target settling time in s.
        #[arg(long, default_value_t = 10.0)]
        target_ts: f64,
        /// Speed limit for the baseline gain in cm/s.
        #[arg(long, default_value_t = SPEED_LIMIT)]
        v_max: f64,
    },
    /// Report per-mode roots and the spectral radius of the configured controller.
    Stability(Common),
    /// Sweep the reference filter cutoff.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated cutoff frequencies in rad/s.
        #[arg(long, value_delimiter = ',')]
        omega_c_list: Option<Vec<f64>>,
    },
    /// Run both bundled scenarios and compare against the reference table.
    Reproduce {
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Relative tolerance on the table values.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
}

/// Error plus the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure {
            code: exit_code(&error),
            error,
        }
    }
}

pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::InvalidNetwork(_)
        | Error::UnpinnedNetwork
        | Error::NotSymmetric { .. }
        | Error::TooLarge { .. }
        | Error::InvalidController(_)
        | Error::InvalidTrajectory(_)
        | Error::InvalidTuning(_) => EXIT_CONFIG,
        _ => 1,
    }
}

fn scenario(path: Option<&Path>) -> std::result::Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => load_config(p).map_err(|error| Failure {
            code: EXIT_CONFIG,
            error,
        }),
        None => Ok(ScenarioConfig::paper_dsr()),
    }
}

/// Runs a parsed command; returns the process exit code on success paths.
pub fn run(cli: Cli) -> std::result::Result<u8, Failure> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let code = match cli.command {
        Command::Simulate(c) => {
            cmd_simulate(&scenario(c.config.as_deref())?, &c.out)?;
            0
        }
        Command::Tune {
            common,
            target_ts,
            v_max,
        } => {
            cmd_tune(
                &scenario(common.config.as_deref())?,
                &common.out,
                target_ts,
                v_max,
                exec,
            )?;
            0
        }
        Command::Stability(c) => {
            cmd_stability(&scenario(c.config.as_deref())?, &c.out)?;
            0
        }
        Command::Sweep {
            common,
            omega_c_list,
        } => {
            let omegas = omega_c_list.unwrap_or_else(default_cutoff_grid);
            cmd_sweep(
                &scenario(common.config.as_deref())?,
                &common.out,
                &omegas,
                exec,
            )?;
            0
        }
        Command::Reproduce { out, tolerance } => {
            if tolerance.is_nan() || tolerance < 0.0 {
                return Err(Error::Validation(vec![format!(
                    "--tolerance: must be >= 0, got {tolerance}"
                )])
                .into());
            }
            let report = cmd_reproduce(&out, tolerance)?;
            if report.passed() {
                0
            } else {
                EXIT_ACCEPTANCE
            }
        }
    };
    Ok(code)
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub summary: RunSummary,
    pub spectral_radius: f64,
    pub stable: bool,
    pub final_positions: Vec<f64>,
}

pub fn cmd_simulate(config: &ScenarioConfig, out: &Path) -> Result<SimulateReport> {
    let trace = simulate(config)?;
    let final_value =
        (config.trajectory.final_value() != 0.0).then(|| config.trajectory.final_value());
    let summary = summarize(&trace, final_value);
    let lap = config.network.laplacian()?;
    let stability = controller_report(&lap, &config.controller);
    let trace_path = out.join(config.output.trace.as_deref().unwrap_or("trace.csv"));
    write_trace(&trace_path, &trace)?;
    let report = SimulateReport {
        summary,
        spectral_radius: stability.spectral_radius,
        stable: stability.stable,
        final_positions: trace.final_positions().to_vec(),
    };
    write_json(
        out.join(config.output.summary.as_deref().unwrap_or("summary.json")),
        &report,
    )?;
    let summary = &report.summary;
    println!("D_bar    {} cm", fmt_g(summary.max_deformation, 6));
    println!("f_bar    {} N", fmt_g(summary.max_force, 6));
    println!("v_max    {} cm/s", fmt_g(summary.max_speed, 6));
    if let Some(ts) = summary.settling_time {
        println!("T_s      {} s", fmt_g(ts, 6));
    }
    info!("trace written to {}", trace_path.display());
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct TuneReport {
    pub target_ts: f64,
    pub baseline: TuningResult,
    pub dsr: TuningResult,
    /// Closed-form α anchor `4/T_s`.
    pub alpha_anchor: f64,
    /// Closed-form β anchor `2/(λ_min + λ_max)`.
    pub beta_anchor: f64,
    /// Max commanded speeds on the scenario's own reference.
    pub scenario_speed_baseline: f64,
    pub scenario_speed_dsr: f64,
}

pub fn cmd_tune(
    config: &ScenarioConfig,
    out: &Path,
    target_ts: f64,
    v_max: f64,
    exec: Execution,
) -> Result<TuneReport> {
    let lap = config.network.laplacian()?;
    let mut spec = TuningSpec::new(target_ts, v_max, config.controller.dt);
    spec.exec = exec;
    let started = Instant::now();
    let gamma = tune_gamma(&lap, &spec)?;
    let dsr = tune_dsr(&lap, &spec, gamma.result.max_speed)?;
    info!("tuning took {:.2} s", started.elapsed().as_secs_f64());

    let scenario_speed = |law: ControlLaw| -> Result<f64> {
        let mut ctrl = config.controller;
        ctrl.law = law;
        let trace = simulate_on(&lap, &ctrl, &config.trajectory, config.duration)?;
        Ok(summarize(&trace, None).max_speed)
    };
    let v_base = scenario_speed(gamma.result.controller.law)?;
    let v_dsr = scenario_speed(dsr.result.controller.law)?;
    if v_dsr > v_base {
        warn!("tuned DSR gains command {v_dsr} cm/s on the scenario reference, above the baseline's {v_base}");
    }
    if v_base > v_max {
        warn!(
            "tuned baseline gain commands {v_base} cm/s on the scenario reference, above {v_max}"
        );
    }

    let report = TuneReport {
        target_ts,
        baseline: gamma.result.clone(),
        dsr: dsr.result.clone(),
        alpha_anchor: 4.0 / target_ts,
        beta_anchor: 2.0 / (lap.lambda_min() + lap.lambda_max()),
        scenario_speed_baseline: v_base,
        scenario_speed_dsr: v_dsr,
    };
    write_json(out.join("tuning.json"), &report)?;
    write_gamma_curve(out.join("gamma_curve.csv"), &gamma.curve)?;
    write_dsr_grid(out.join("dsr_grid.csv"), &dsr.grid)?;

    if let ControlLaw::Baseline { gamma } = report.baseline.controller.law {
        println!("gamma    {}", fmt_g(gamma, 6));
    }
    if let ControlLaw::Dsr(g) = report.dsr.controller.law {
        println!(
            "alpha    {}  (anchor {})",
            fmt_g(g.alpha, 6),
            fmt_g(report.alpha_anchor, 6)
        );
        println!(
            "beta     {}  (anchor {})",
            fmt_g(g.beta, 6),
            fmt_g(report.beta_anchor, 6)
        );
    }
    println!(
        "T_s      baseline {} s, DSR {} s (measured, unit step)",
        fmt_g(report.baseline.measured_ts, 4),
        fmt_g(report.dsr.measured_ts, 4)
    );
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct StabilityOutput {
    pub eigenvalues: Vec<f64>,
    /// `2/λ_max` for the baseline, the closed-form β bound for DSR.
    pub gain_bound: f64,
    pub report: StabilityReport,
}

pub fn cmd_stability(config: &ScenarioConfig, out: &Path) -> Result<StabilityOutput> {
    let lap = config.network.laplacian()?;
    let report = controller_report(&lap, &config.controller);
    let gain_bound = match config.controller.law {
        ControlLaw::Baseline { .. } => baseline_gamma_bound(&lap),
        ControlLaw::Dsr(g) => dsr_beta_bound(&lap, g.alpha, config.controller.dt),
    };
    for mode in &report.modes {
        let roots: Vec<String> = mode
            .roots
            .iter()
            .map(|r| {
                let sign = if r.im < 0.0 { '-' } else { '+' };
                format!("{} {sign} {}i", fmt_g(r.re, 6), fmt_g(r.im.abs(), 6))
            })
            .collect();
        println!(
            "lambda {}  roots [{}]",
            fmt_g(mode.lambda, 6),
            roots.join(", ")
        );
    }
    println!(
        "spectral radius {}  {}",
        fmt_g(report.spectral_radius, 9),
        if report.stable { "stable" } else { "UNSTABLE" }
    );
    let output = StabilityOutput {
        eigenvalues: lap.eigenvalues().to_vec(),
        gain_bound,
        report,
    };
    write_json(out.join("stability.json"), &output)?;
    Ok(output)
}

pub fn cmd_sweep(
    config: &ScenarioConfig,
    out: &Path,
    omegas: &[f64],
    exec: Execution,
) -> Result<Vec<crate::trajectory::SweepRow>> {
    let rows = cutoff_sweep(config, omegas, exec)?;
    write_sweep(out.join("sweep.csv"), &rows)?;
    for r in &rows {
        println!(
            "omega_c {:<8} D_bar {:<10} v_max {}",
            fmt_g(r.omega_c, 4),
            fmt_g(r.max_deformation, 6),
            fmt_g(r.max_speed, 6)
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: String,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct ReproduceReport {
    pub baseline: RunSummary,
    pub dsr: RunSummary,
    pub improvement: Improvement,
    pub eigenvalues: Vec<f64>,
    pub runtime_s: f64,
    pub checks: Vec<Check>,
}

impl ReproduceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn within(name: &str, measured: f64, expected: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        measured,
        expected: format!("{expected} ±{}%", tolerance * 100.0),
        passed: (measured - expected).abs() <= tolerance * expected.abs(),
    }
}

fn at_least(name: &str, measured: f64, floor: f64) -> Check {
    Check {
        name: name.into(),
        measured,
        expected: format!(">= {floor}"),
        passed: measured >= floor,
    }
}

fn at_most(name: &str, measured: f64, ceiling: f64) -> Check {
    Check {
        name: name.into(),
        measured,
        expected: format!("<= {}", fmt_g(ceiling, 6)),
        passed: measured <= ceiling,
    }
}

/// Runs both bundled scenarios and scores them against the reference values.
pub fn reproduce(tolerance: f64) -> Result<ReproduceReport> {
    let started = Instant::now();
    let baseline_cfg = ScenarioConfig::paper_baseline();
    let dsr_cfg = ScenarioConfig::paper_dsr();
    let base_trace = simulate(&baseline_cfg)?;
    let dsr_trace = simulate(&dsr_cfg)?;
    let final_value = baseline_cfg.trajectory.final_value();
    let baseline = summarize(&base_trace, Some(final_value));
    let dsr = summarize(&dsr_trace, Some(final_value));
    let improvement = improvement(&baseline, &dsr);
    let lap: PinnedLaplacian = baseline_cfg.network.laplacian()?;
    let runtime_s = started.elapsed().as_secs_f64();

    let checks = vec![
        within(
            "baseline f_bar (N)",
            baseline.max_force,
            BASELINE_FORCE,
            tolerance,
        ),
        within(
            "baseline D_bar (cm)",
            baseline.max_deformation,
            BASELINE_DEFORMATION,
            tolerance,
        ),
        within("DSR f_bar (N)", dsr.max_force, DSR_FORCE, tolerance),
        within(
            "DSR D_bar (cm)",
            dsr.max_deformation,
            DSR_DEFORMATION,
            tolerance,
        ),
        at_least(
            "D_bar improvement (%)",
            improvement.deformation_pct,
            MIN_IMPROVEMENT_PCT,
        ),
        at_least(
            "f_bar improvement (%)",
            improvement.force_pct,
            MIN_IMPROVEMENT_PCT,
        ),
        at_most("baseline v_max (cm/s)", baseline.max_speed, SPEED_LIMIT),
        at_most("DSR v_max (cm/s)", dsr.max_speed, baseline.max_speed),
        at_most("runtime (s)", runtime_s, 5.0),
    ];
    Ok(ReproduceReport {
        baseline,
        dsr,
        improvement,
        eigenvalues: lap.eigenvalues().to_vec(),
        runtime_s,
        checks,
    })
}

fn settling(ts: Option<f64>) -> String {
    ts.map_or("-".into(), |t| fmt_g(t, 4))
}

pub fn cmd_reproduce(out: &Path, tolerance: f64) -> Result<ReproduceReport> {
    let report = reproduce(tolerance)?;
    println!(
        "{:<12} {:>10} {:>10} {:>12} {:>10}",
        "", "f_bar (N)", "D_bar (cm)", "v_max (cm/s)", "T_s (s)"
    );
    for (label, s) in [("without DSR", &report.baseline), ("with DSR", &report.dsr)] {
        println!(
            "{:<12} {:>10} {:>10} {:>12} {:>10}",
            label,
            fmt_g(s.max_force, 4),
            fmt_g(s.max_deformation, 4),
            fmt_g(s.max_speed, 4),
            settling(s.settling_time)
        );
    }
    println!(
        "{:<12} {:>9}% {:>9}%",
        "improvement",
        fmt_g(report.improvement.force_pct, 3),
        fmt_g(report.improvement.deformation_pct, 3)
    );
    println!();
    for c in &report.checks {
        println!(
            "[{}] {:<24} {} (expected {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_g(c.measured, 6),
            c.expected
        );
    }
    write_json(out.join("reproduce.json"), &report)?;
    Ok(report)
}
