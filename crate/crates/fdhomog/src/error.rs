//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance matrix is not numerically positive definite")]
    CovarianceFactorization,

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error("csv shape error at line {line}: expected {expected} values, found {found}")]
    CsvShape {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("samples are defined on different grids")]
    GridMismatch,

    #[error("sample carries no labels")]
    MissingLabels,

    #[error("split on label {0:?} would leave an empty group")]
    EmptyGroup(String),

    #[error("regressor values are all equal; the line fit is undefined")]
    DegenerateRegressor,

    #[error("t statistics are undefined for a degenerate fit")]
    DegenerateFit,

    #[error("bootstrap produced only degenerate replicates ({attempts} attempts for {needed} replicates)")]
    InsufficientVariation { needed: usize, attempts: usize },

    #[error("unknown builtin model id {0} (expected 0..=5)")]
    UnknownModel(u8),

    #[error("cloud size {size} exceeds the brute-force limit {limit}")]
    OracleSizeLimit { size: usize, limit: usize },

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
