use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A transform was queried outside of its definition domain.
    #[error("{transform}: argument {argument} outside domain {domain}")]
    Domain {
        transform: &'static str,
        argument: f64,
        domain: String,
    },

    #[error("numerical failure in {context}: {detail}")]
    NumericalFailure { context: String, detail: String },

    /// Tilted moments collapsed to a variance that cannot be represented.
    #[error("degenerate moments: variance {variance:e}")]
    DegenerateMoment { variance: f64 },

    /// Error raised at a given coordinate of a vectorized evaluation.
    #[error("at index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration {iteration}: non-finite or invalid state ({detail})")]
    Divergence { iteration: usize, detail: String },

    /// The EP precision matrix lost positive definiteness.
    #[error("iteration {iteration}: factorization failed ({detail})")]
    Instability { iteration: usize, detail: String },

    #[error("invalid solver state: {0}")]
    InvalidState(String),

    #[error("no analytic spectral profile for {0}")]
    NoAnalyticProfile(String),

    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),

    #[error("{path}: parse error at line {line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NumericalFailure {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn at_index(self, index: usize) -> Self {
        Error::AtIndex {
            index,
            source: Box::new(self),
        }
    }

    /// True for errors that stem from the numerics rather than from user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalFailure { .. }
            | Error::DegenerateMoment { .. }
            | Error::Divergence { .. }
            | Error::Instability { .. }
            | Error::Domain { .. }
            | Error::DiagnosticUnavailable(_) => true,
            Error::AtIndex { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
