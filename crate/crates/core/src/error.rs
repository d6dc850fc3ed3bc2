use thiserror::Error;

/// Errors produced by the numerics library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("{what} = {value} is outside the supported regime (limit {limit})")]
    OutOfRegime {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("truncation overflow in {what}: squared norm {observed} vs expected {expected}")]
    TruncationOverflow {
        what: &'static str,
        observed: f64,
        expected: f64,
    },

    #[error("grid does not cover the state: {0}")]
    GridCoverage(String),

    #[error("angle set cannot resolve the moment (residual {residual:.3e})")]
    SingularSystem { residual: f64 },

    #[error("moment of order {order} needs {needed} distinct phases mod pi, found {found}")]
    InsufficientAngles {
        order: usize,
        needed: usize,
        found: usize,
    },

    #[error("threshold minimum is not positive: {0}")]
    NonPositiveThreshold(f64),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
