//! Scenario files.
//!
//! A scenario is a TOML document with four sections:
//!
//! ```toml
//! [network]
//! neighbor_stiffness = [0.05, 0.05, 0.05]   # chain springs, N/cm
//! leader_stiffness = [0.05, 0.0, 0.0, 0.0]  # virtual-source springs, N/cm
//! # edges = [[0, 1, 0.05], [1, 2, 0.05]]    # instead of a chain: (i, j, k) triples
//!
//! [controller]
//! kind = "dsr"          # or "baseline" with `gamma`
//! dt = 0.03
//! alpha = 0.39
//! beta = 10.92
//! delay_multiple = 1
//!
//! [trajectory]
//! kind = "filtered_step"  # or "step"
//! amplitude = 50.0        # cm
//! omega_c = 0.1           # rad/s
//! start_index = 1
//!
//! [run]
//! duration = 60.0
//! trace = "trace.csv"      # optional, relative to the output directory
//! summary = "summary.json" # optional
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlLaw, ControllerConfig, DsrGains};
use crate::error::{Error, Result};
use crate::network::{PinnedLaplacian, StiffnessChain, StiffnessGraph};
use crate::trajectory::{TrajectoryKind, TrajectorySpec};

pub const PAPER_BASELINE: &str = include_str!("../configs/paper_baseline.toml");
pub const PAPER_DSR: &str = include_str!("../configs/paper_dsr.toml");

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    Chain(StiffnessChain),
    Graph {
        edges: Vec<(usize, usize, f64)>,
        leader_stiffness: Vec<f64>,
    },
}

impl NetworkSpec {
    pub fn len(&self) -> usize {
        match self {
            NetworkSpec::Chain(c) => c.len(),
            NetworkSpec::Graph {
                leader_stiffness, ..
            } => leader_stiffness.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn laplacian(&self) -> Result<PinnedLaplacian> {
        match self {
            NetworkSpec::Chain(chain) => PinnedLaplacian::from_chain(chain),
            NetworkSpec::Graph {
                edges,
                leader_stiffness,
            } => {
                let graph =
                    StiffnessGraph::new(leader_stiffness.len(), edges, leader_stiffness.clone())?;
                PinnedLaplacian::from_graph(graph)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputPaths {
    pub trace: Option<String>,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub network: NetworkSpec,
    pub controller: ControllerConfig,
    pub trajectory: TrajectorySpec,
    /// Simulated time in s.
    pub duration: f64,
    pub output: OutputPaths,
}

impl ScenarioConfig {
    pub fn paper_baseline() -> Self {
        parse_config(PAPER_BASELINE, Path::new("paper_baseline.toml"))
            .expect("bundled config is valid")
    }

    pub fn paper_dsr() -> Self {
        parse_config(PAPER_DSR, Path::new("paper_dsr.toml")).expect("bundled config is valid")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawScenario::from(self)).expect("scenario serializes to TOML")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    network: RawNetwork,
    controller: RawController,
    trajectory: RawTrajectory,
    run: RawRun,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(skip_serializing_if = "Option::is_none")]
    neighbor_stiffness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize, f64)>>,
    leader_stiffness: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawControllerKind {
    Baseline,
    Dsr,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    kind: RawControllerKind,
    dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delay_multiple: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawTrajectoryKind {
    Step,
    FilteredStep,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    kind: RawTrajectoryKind,
    amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start_index: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    duration: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<String>,
}

impl From<&ScenarioConfig> for RawScenario {
    fn from(c: &ScenarioConfig) -> Self {
        let network = match &c.network {
            NetworkSpec::Chain(chain) => RawNetwork {
                neighbor_stiffness: Some(chain.neighbor_stiffness().to_vec()),
                edges: None,
                leader_stiffness: chain.leader_stiffness().to_vec(),
            },
            NetworkSpec::Graph {
                edges,
                leader_stiffness,
            } => RawNetwork {
                neighbor_stiffness: None,
                edges: Some(edges.clone()),
                leader_stiffness: leader_stiffness.clone(),
            },
        };
        let controller = match c.controller.law {
            ControlLaw::Baseline { gamma } => RawController {
                kind: RawControllerKind::Baseline,
                dt: c.controller.dt,
                gamma: Some(gamma),
                alpha: None,
                beta: None,
                delay_multiple: None,
            },
            ControlLaw::Dsr(g) => RawController {
                kind: RawControllerKind::Dsr,
                dt: c.controller.dt,
                gamma: None,
                alpha: Some(g.alpha),
                beta: Some(g.beta),
                delay_multiple: Some(g.delay),
            },
        };
        let (kind, omega_c) = match c.trajectory.kind {
            TrajectoryKind::Step => (RawTrajectoryKind::Step, None),
            TrajectoryKind::FilteredStep { omega_c } => {
                (RawTrajectoryKind::FilteredStep, Some(omega_c))
            }
        };
        RawScenario {
            network,
            controller,
            trajectory: RawTrajectory {
                kind,
                amplitude: c.trajectory.amplitude,
                omega_c,
                start_index: Some(c.trajectory.start_index),
            },
            run: RawRun {
                duration: c.duration,
                trace: c.output.trace.clone(),
                summary: c.output.summary.clone(),
            },
        }
    }
}

fn require(value: Option<f64>, field: &str, kind: &str, problems: &mut Vec<String>) -> f64 {
    value.unwrap_or_else(|| {
        problems.push(format!("{field}: required for kind = \"{kind}\""));
        f64::NAN
    })
}

fn forbid<T>(value: &Option<T>, field: &str, kind: &str, problems: &mut Vec<String>) {
    if value.is_some() {
        problems.push(format!("{field}: not used by kind = \"{kind}\""));
    }
}

impl RawScenario {
    fn validate(self) -> std::result::Result<ScenarioConfig, Vec<String>> {
        let mut problems = Vec::new();

        let leader = self.network.leader_stiffness;
        let network = match (self.network.neighbor_stiffness, self.network.edges) {
            (Some(_), Some(_)) => {
                problems.push("network: give either neighbor_stiffness or edges, not both".into());
                None
            }
            (None, None) => {
                problems.push("network: one of neighbor_stiffness or edges is required".into());
                None
            }
            (Some(springs), None) => {
                let chain = StiffnessChain::new(springs, leader);
                match chain {
                    Ok(chain) => Some(NetworkSpec::Chain(chain)),
                    Err(e) => {
                        problems.push(format!("network: {e}"));
                        None
                    }
                }
            }
            (None, Some(edges)) => Some(NetworkSpec::Graph {
                edges,
                leader_stiffness: leader,
            }),
        };
        if let Some(spec) = &network {
            if let Err(e) = spec.laplacian() {
                problems.push(format!("network: {e}"));
            }
        }

        let rc = self.controller;
        let law = match rc.kind {
            RawControllerKind::Baseline => {
                forbid(&rc.alpha, "controller.alpha", "baseline", &mut problems);
                forbid(&rc.beta, "controller.beta", "baseline", &mut problems);
                forbid(
                    &rc.delay_multiple,
                    "controller.delay_multiple",
                    "baseline",
                    &mut problems,
                );
                ControlLaw::Baseline {
                    gamma: require(rc.gamma, "controller.gamma", "baseline", &mut problems),
                }
            }
            RawControllerKind::Dsr => {
                forbid(&rc.gamma, "controller.gamma", "dsr", &mut problems);
                ControlLaw::Dsr(DsrGains {
                    alpha: require(rc.alpha, "controller.alpha", "dsr", &mut problems),
                    beta: require(rc.beta, "controller.beta", "dsr", &mut problems),
                    delay: rc.delay_multiple.unwrap_or(1),
                })
            }
        };
        let controller = ControllerConfig { law, dt: rc.dt };
        for (field, msg) in controller.violations() {
            let missing = problems
                .iter()
                .any(|p| p.starts_with(&format!("controller.{field}:")));
            if !missing {
                problems.push(format!("controller.{field}: {msg}"));
            }
        }

        let rt = self.trajectory;
        let kind = match rt.kind {
            RawTrajectoryKind::Step => {
                forbid(&rt.omega_c, "trajectory.omega_c", "step", &mut problems);
                TrajectoryKind::Step
            }
            RawTrajectoryKind::FilteredStep => TrajectoryKind::FilteredStep {
                omega_c: require(
                    rt.omega_c,
                    "trajectory.omega_c",
                    "filtered_step",
                    &mut problems,
                ),
            },
        };
        let trajectory = TrajectorySpec {
            kind,
            amplitude: rt.amplitude,
            start_index: rt.start_index.unwrap_or(1),
        };
        if !problems.iter().any(|p| p.starts_with("trajectory.omega_c")) {
            for msg in trajectory.violations(controller.dt) {
                problems.push(format!("trajectory: {msg}"));
            }
        }

        let duration = self.run.duration;
        if !(duration > 0.0 && duration.is_finite()) {
            problems.push(format!("run.duration: must be > 0, got {duration}"));
        } else if controller.dt > 0.0 && trajectory.violations(controller.dt).is_empty() {
            let horizon = trajectory.horizon(controller.dt);
            if duration < horizon {
                problems.push(format!(
                    "run.duration: {duration} s is shorter than the trajectory horizon {horizon} s"
                ));
            }
        }

        match (problems.is_empty(), network) {
            (true, Some(network)) => Ok(ScenarioConfig {
                network,
                controller,
                trajectory,
                duration,
                output: OutputPaths {
                    trace: self.run.trace,
                    summary: self.run.summary,
                },
            }),
            _ => Err(problems),
        }
    }
}

/// Parses and validates scenario text; `origin` only labels error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<ScenarioConfig> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    raw.validate().map_err(Error::Validation)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

pub fn write_config(path: impl AsRef<Path>, config: &ScenarioConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, config.to_toml_string()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        parse_config(text, Path::new("test.toml"))
    }

    #[test]
    fn bundled_baseline() {
        let c = ScenarioConfig::paper_baseline();
        assert_eq!(
            c.network,
            NetworkSpec::Chain(StiffnessChain::reference_experiment())
        );
        assert_eq!(c.controller, ControllerConfig::baseline(1.93, 0.03));
        assert_eq!(c.trajectory, TrajectorySpec::filtered_step(50.0, 0.1));
        assert_eq!(c.duration, 60.0);
    }

    #[test]
    fn bundled_dsr() {
        let c = ScenarioConfig::paper_dsr();
        assert_eq!(c.controller, ControllerConfig::dsr(0.39, 10.92, 0.03));
    }

    #[test]
    fn zero_beta_is_a_validation_error() {
        let text = PAPER_DSR.replace("beta = 10.92", "beta = 0.0");
        match parse(&text) {
            Err(Error::Validation(v)) => {
                assert_eq!(v, vec!["controller.beta: must be > 0, got 0".to_string()])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_violations_are_listed() {
        let text = PAPER_DSR
            .replace("beta = 10.92", "beta = -1.0")
            .replace("alpha = 0.39", "")
            .replace(
                "leader_stiffness = [0.05, 0.0, 0.0, 0.0]",
                "leader_stiffness = [0.0, 0.0, 0.0, 0.0]",
            )
            .replace("duration = 60.0", "duration = 10.0");
        let Err(Error::Validation(v)) = parse(&text) else {
            panic!("expected validation error")
        };
        assert!(v.iter().any(|p| p.starts_with("network:")), "{v:?}");
        assert!(
            v.iter()
                .any(|p| p.starts_with("controller.alpha: required")),
            "{v:?}"
        );
        assert!(
            v.iter()
                .any(|p| p.starts_with("controller.beta: must be > 0")),
            "{v:?}"
        );
        assert!(v.iter().any(|p| p.starts_with("run.duration")), "{v:?}");
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = PAPER_DSR.replace("beta = 10.92", "beta = \"ten\"");
        match parse(&text) {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("line"), "{message}");
                assert!(message.contains("beta"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse(&format!("{PAPER_DSR}\n[extra]\nx = 1\n")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn general_graph_section() {
        let text = PAPER_BASELINE.replace(
            "neighbor_stiffness = [0.05, 0.05, 0.05]",
            "edges = [[0, 1, 0.05], [1, 2, 0.05], [2, 3, 0.05], [0, 3, 0.01]]",
        );
        let c = parse(&text).unwrap();
        let lap = c.network.laplacian().unwrap();
        assert!((lap.matrix()[(0, 3)] + 0.01).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        for c in [
            ScenarioConfig::paper_baseline(),
            ScenarioConfig::paper_dsr(),
        ] {
            assert_eq!(parse(&c.to_toml_string()).unwrap(), c);
        }
    }
}
