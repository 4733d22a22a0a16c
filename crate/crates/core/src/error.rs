use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("singular dense system: zero pivot in column {column}")]
    SingularDense { column: usize },

    #[error("oracle too large: {unknowns} unknowns exceeds the limit of {limit}")]
    OracleTooLarge { unknowns: usize, limit: usize },

    #[error("oracle failed to converge: {0}")]
    OracleFailure(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("observed order undefined: {0}")]
    UndefinedOrder(String),

    #[error("history buffer of {bytes} bytes could not be allocated")]
    HistoryAllocation { bytes: u64 },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}
