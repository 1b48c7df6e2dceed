use thiserror::Error;

/// Everything that can go wrong in a solve.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inclusion index {index} out of range (have {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("location {0:?} lies outside the closed domain")]
    OutsideDomain(Vec<f64>),

    #[error("epsilon must be positive here, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("lambda = {lambda} is within {distance:e} of a pole")]
    PoleProximity { lambda: f64, distance: f64 },

    #[error("factorization broke down at pivot {pivot} (|d| = {value:e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("solvability violated: source mean {mean:e} is not zero")]
    Solvability { mean: f64 },

    #[error("singular reduced system (det = {det:e})")]
    SingularReduced { det: f64 },

    #[error("root bracketing failed on [{lo}, {hi}]: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    #[error("Bloch vector {0:?} is too close to an integer vector")]
    IntegerBlochVector(Vec<f64>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
