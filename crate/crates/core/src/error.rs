use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("response at row {row} is {value}, outside the open unit interval (enable squeeze to transform boundary values)")]
    BoundaryResponse { row: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objective evaluated to {value} at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },

    #[error("design matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degenerate score covariance: {0}")]
    Degenerate(String),

    #[error("integration failed: subdivision budget exhausted with error estimate {estimate:e} > {tol:e}")]
    Integration { estimate: f64, tol: f64 },

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{context} failed after {attempts} attempts: {source}")]
    RetriesExhausted {
        context: String,
        attempts: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
