use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("time {time} is not a node of the grid")]
    OffGrid { time: f64 },

    #[error("non-finite drift value {value} at t = {time}")]
    NonFiniteDrift { time: f64, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("conditional precision matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid sampler configuration: {0}")]
    InvalidSampler(String),

    #[error("dataset error at row {row}, column '{column}': {message}")]
    Dataset {
        row: usize,
        column: String,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("estimate failed: {0}")]
    EstimateFailed(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
