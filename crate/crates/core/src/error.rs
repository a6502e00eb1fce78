use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("unpinned network: at least one robot needs a virtual-source stiffness > 0")]
    UnpinnedNetwork,

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix dimension {dim} exceeds the eigensolver cap of {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("inconsistent calibration data: {0}")]
    InconsistentCalibration(String),

    #[error("invalid controller: {0}")]
    InvalidController(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("unstable gain: gamma = {gamma} is outside (0, {bound})")]
    UnstableGain { gamma: f64, bound: f64 },

    #[error("invalid tuning request: {0}")]
    InvalidTuning(String),

    #[error(
        "target settling time {target} s is unreachable; achievable interval is [{min}, {max}] s"
    )]
    UnreachableTarget { target: f64, min: f64, max: f64 },

    #[error("no feasible (alpha, beta) point: {0}")]
    NoFeasiblePoint(String),

    #[error("diverged at step {step}")]
    Diverged { step: usize },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
