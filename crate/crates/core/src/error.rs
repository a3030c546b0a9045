use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs that are individually well-formed but inconsistent with each other
    /// (dimension mismatches, invalid schedule constants, mu above the unit enlargement).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than by a run going wrong.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::UnknownFixture(_) | Error::Io { .. } => {
                true
            }
            Error::AtIteration { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
