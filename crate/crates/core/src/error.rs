use thiserror::Error;

/// Errors raised by the measure, solver and bound routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("order {alpha} outside the admissible range {range}")]
    OrderOutOfRange { alpha: f64, range: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tilt undefined: divergence is infinite")]
    TiltUndefined,

    #[error("infinite conditional divergence: operator undefined at this point")]
    InfiniteDivergence,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("missing cost matrix: channel carries no cost function")]
    MissingCost,

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("certificate violated: {0}")]
    Certificate(String),

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
