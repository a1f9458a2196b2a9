use thiserror::Error;

/// Errors produced while building models and computing bounds.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension index {index} out of range for a {dim}-dimensional model")]
    DimensionIndex { index: usize, dim: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid component `{component}`: {reason}")]
    InvalidComponent { component: String, reason: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid piecewise function: {0}")]
    InvalidFunction(String),

    #[error("invalid stationary distribution: {0}")]
    InvalidDistribution(String),

    #[error("rate sum {sum} exceeds uniformization constant {gamma} in component `{component}`")]
    RateSumExceeded {
        component: String,
        sum: f64,
        gamma: f64,
    },

    #[error("random walk does not have negative drift (supremum {sup} in dimension {dim})")]
    NoNegativeDrift { dim: usize, sup: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("refinement error: {0}")]
    Refinement(String),

    #[error("no flow decomposition couples component {component} with step {step}")]
    PhiInfeasible { component: usize, step: String },

    #[error("linear program error: {0}")]
    Lp(String),

    #[error("numerical failure in simplex: {0}")]
    Numerical(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
