//! Decentralized cohesive transport of flexible objects by robot networks.
//!
//! Robots attached to a flexible object update their positions from local
//! force measurements. Two update laws are provided: the plain local-force
//! consensus update and the delayed self reinforcement (DSR) update, which
//! keeps the network cohesive during transitions without any inter-robot
//! communication. Around them sit the tools needed to pick gains and judge
//! the result: pinned-Laplacian modelling, discrete-time stability analysis,
//! settling-time driven tuning, reference trajectories and deformation
//! metrics.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod network;
pub mod output;
pub mod stability;
pub mod trajectory;
pub mod tuning;

pub use config::ScenarioConfig;
pub use dynamics::{
    simulate, ControlLaw, ControllerConfig, DsrGains, NetworkState, SimulationTrace,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use metrics::RunSummary;
pub use network::{PinnedLaplacian, StiffnessChain, StiffnessGraph};
pub use stability::StabilityReport;
pub use trajectory::TrajectorySpec;
pub use tuning::{TuningResult, TuningSpec};
