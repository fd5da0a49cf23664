use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("dataset has no patterns")]
    EmptyDataset,

    #[error("population is empty")]
    EmptyPopulation,

    #[error("effort budget {budget} is smaller than the population size {population}")]
    BudgetTooSmall { budget: u64, population: usize },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line} has {found} columns, expected {expected}")]
    InconsistentWidth {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("split leaves the {part} part empty")]
    DegenerateSplit { part: &'static str },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("fold {fold} (iteration {iteration}) failed: {source}")]
    Fold {
        iteration: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user input (configuration or data) rather
    /// than a failure during the run itself.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Fold { source, .. } => source.is_user_error(),
            Error::InvalidTree(_) | Error::InvalidNetwork(_) | Error::EmptyPopulation => false,
            _ => true,
        }
    }
}
