use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent count must be at least {min}, got {got}")]
    TooFewAgents { min: usize, got: usize },

    #[error("edge ({0}, {1}) references an agent outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),

    #[error("communication graph is disconnected")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid action for {context}: {detail}")]
    InvalidAction { context: &'static str, detail: String },

    #[error("world too small: {cells} cells for {agents} agents")]
    WorldTooSmall { cells: usize, agents: usize },

    #[error("invalid environment config: {0}")]
    InvalidEnv(String),

    #[error("invalid policy spec: {0}")]
    InvalidPolicy(String),

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("trajectory has zero probability under its sampling policy (step {step})")]
    ImpossibleTrajectory { step: usize },

    #[error("importance-weighted gradient blew up: weight {weight:e}, |v*g| {product:e}")]
    WeightBlowUp { weight: f64, product: f64 },

    #[error("run diverged at iteration {iteration}, agent {agent}: {reason}")]
    Diverged {
        iteration: usize,
        agent: usize,
        reason: String,
    },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error("config value out of range for `{key}`: {detail}")]
    OutOfRange { key: String, detail: String },

    #[error("cannot parse `{key}` value `{value}`: {detail}")]
    BadValue { key: String, value: String, detail: String },

    #[error("config line {line}: {detail}")]
    Syntax { line: usize, detail: String },

    #[error("output path {path:?} is not writable: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code category: 2 for configuration problems, 3 for
    /// numerical/runtime faults, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownKey(_)
            | Error::MissingKey(_)
            | Error::OutOfRange { .. }
            | Error::BadValue { .. }
            | Error::Syntax { .. }
            | Error::TooFewAgents { .. }
            | Error::EdgeOutOfRange(..)
            | Error::Disconnected
            | Error::InvalidEnv(_)
            | Error::InvalidPolicy(_)
            | Error::WorldTooSmall { .. } => 2,
            Error::Unwritable { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
            _ => 3,
        }
    }
}
