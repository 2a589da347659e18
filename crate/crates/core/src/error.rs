use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed input: missing column, unparsable field, bad header.
    #[error("format error: {0}")]
    Format(String),

    /// A value violates a documented range or shape invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A value in a data row is out of range. `row` is 1-based and excludes the header.
    #[error("validation error in row {row}: {column} = {value} is outside {expected}")]
    RowOutOfRange {
        row: usize,
        column: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("ordering error in row {row}: timestamp {timestamp} does not follow the previous row")]
    Ordering { row: usize, timestamp: String },

    #[error("hydrogen price scaling undefined: mean electricity price is {mean}")]
    ScalingUndefined { mean: f64 },

    #[error("infeasible delivery requirement: {required} kg requested, at most {max_attainable} kg attainable")]
    Infeasible { required: f64, max_attainable: f64 },

    /// The LP oracle failed to terminate or detected an unbounded problem.
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
