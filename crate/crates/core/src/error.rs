use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the oracle solvers, learners, environments and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("linear system is singular or ill-conditioned (residual {residual:e})")]
    SingularSystem { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature matrix is rank deficient: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("projection direction has zero norm")]
    ZeroDirection,

    #[error("stability margin is not positive (delta = {0:e})")]
    NonPositiveMargin(f64),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("could not draw a full-rank feature matrix after {attempts} attempts")]
    RankFailure { attempts: usize },

    #[error("non-finite iterate at step {step}")]
    NonFiniteUpdate { step: usize },

    #[error("illegal action: {0}")]
    IllegalAction(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no feasible action")]
    NoFeasibleAction,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
