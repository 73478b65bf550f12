use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or unusable configuration.
    Config,
    /// Input data is missing, malformed or degenerate.
    Data,
    /// A numerical routine failed.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate post id {0:?}")]
    DuplicateId(String),

    #[error("missing required column or field {0:?}")]
    MissingField(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no guidance lines in {}", .0.display())]
    NoGuidance(PathBuf),

    #[error("guidance line {line} has no keywords in the {context}")]
    GuidanceUnmatched { line: usize, context: &'static str },

    #[error("term {0:?} is not in the vocabulary")]
    UnknownTerm(String),

    #[error("{}:{line}: expected {expected} vector components, found {found}", path.display())]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("embedding file {} shares no words with the vocabulary", .0.display())]
    NoOverlap(PathBuf),

    #[error("term {0:?} never occurs in the reference documents")]
    TermNeverOccurs(String),

    #[error("{0}")]
    EmptyInput(String),

    #[error("truncated SVD did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Wrap this error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Config,
            Error::NotConverged { .. } => ErrorKind::Numeric,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
