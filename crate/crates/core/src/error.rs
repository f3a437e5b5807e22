use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spline basis: {0}")]
    InvalidBasis(String),

    #[error("point {0} lies outside the unit interval")]
    OutOfDomain(f64),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter state: {0}")]
    InvalidState(String),

    #[error("lag index {index} out of range 1..={max}")]
    LagOutOfRange { index: usize, max: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("invalid sampler configuration: {0}")]
    InvalidSampler(String),

    #[error("initial log posterior is not finite ({0})")]
    NonFiniteStart(f64),

    #[error("length mismatch: {left} observations vs {right} fitted values")]
    LengthMismatch { left: usize, right: usize },

    #[error("fit contains no draws")]
    EmptyFit,

    #[error("unknown function selector `{0}`")]
    UnknownFunction(String),

    #[error("true functions violate the stationarity constraints: {0}")]
    InvalidTruth(String),

    #[error("region `{region}` not found in {path}")]
    MissingRegion { region: String, path: PathBuf },

    #[error("column `{column}` not found in {path}")]
    MissingColumn { column: String, path: PathBuf },

    #[error("{path}:{line}: cannot parse row: {reason}")]
    BadRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("cannot parse date `{0}`")]
    BadDate(String),

    #[error("selection from {0} is empty")]
    EmptySelection(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
