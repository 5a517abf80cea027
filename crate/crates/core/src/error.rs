use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every stage of the pipeline.
///
/// The CLI maps these onto process exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown country {0}")]
    UnknownCountry(String),

    #[error("country {0} has no publication statistics")]
    MissingStats(String),

    #[error("non-consecutive years in rolling window: {0:?}")]
    NonConsecutiveYears(Vec<i32>),

    #[error("edge {a}-{b} has non-positive weight {weight}")]
    NonPositiveWeight { a: String, b: String, weight: f64 },

    #[error("normalization denominator is zero for edge {a}-{b}")]
    ZeroDenominator { a: String, b: String },

    #[error("network too small: need at least {needed} nodes, have {actual}")]
    TooSmall { needed: usize, actual: usize },

    #[error("insufficient sample for lag {lag}: {usable} usable observations, need {needed}")]
    InsufficientSample { lag: usize, usable: usize, needed: usize },

    #[error("rank-deficient design matrix at lag {lag}")]
    RankDeficient { lag: usize },

    #[error("series {0} has no variance after differencing")]
    DegenerateSeries(String),

    #[error("p-value {0} outside [0, 1]")]
    PValueRange(f64),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// 2 for data errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence { .. } | Error::RankDeficient { .. } => 3,
            _ => 2,
        }
    }
}
