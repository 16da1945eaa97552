use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification used to pick a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{column}`")]
    MissingColumn { column: String },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("cumulative deaths decrease on {date} ({previous} -> {current})")]
    Monotonicity {
        date: NaiveDate,
        previous: u64,
        current: u64,
    },

    #[error("duplicate date {date} in fatality series")]
    DuplicateDate { date: NaiveDate },

    #[error("week starting {week_start} has zero total devices")]
    EmptyWeek { week_start: NaiveDate },

    #[error("no devices reported for the day")]
    UndefinedDay,

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("design matrix is rank deficient at column {column}")]
    Singular { column: usize },

    #[error("insufficient observations: need at least {needed}, got {got}")]
    InsufficientObservations { needed: usize, got: usize },

    #[error("size error: {0}")]
    Size(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series has zero variance; statistic undefined")]
    ZeroVariance,

    #[error("series still nonstationary after {order} differences")]
    Nonstationary { order: usize },

    #[error("optimizer did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("response value {value} at index {index} lies on the boundary; apply the (y(N-1)+0.5)/N adjustment before fitting")]
    Boundary { index: usize, value: f64 },

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("export error: {0}")]
    Export(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Arity { .. } => ErrorClass::Usage,
            Error::Singular { .. }
            | Error::ZeroVariance
            | Error::Convergence { .. }
            | Error::Nonstationary { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
