use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid slow cutoff N={slow}: must satisfy 1 <= N < M={total}")]
    InvalidCutoff { slow: usize, total: usize },

    #[error("invalid time step {0}: must be positive and finite")]
    InvalidStep(f64),

    #[error("mode {mode} is forced but has non-positive decay rate {alpha}")]
    DegenerateDecay { mode: usize, alpha: f64 },

    #[error("mode {mode} is not a forced fast mode")]
    NotForced { mode: usize },

    #[error("trajectory diverged at t={time}")]
    Divergence { time: f64 },

    #[error("covariance matrix is not positive semidefinite: {0}")]
    Covariance(String),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("statistics window is empty")]
    EmptyWindow,

    #[error("degenerate least-squares design: {0}")]
    DegenerateFit(String),

    #[error("{diverged} of {total} trajectories diverged")]
    EnsembleFailure { diverged: usize, total: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}
