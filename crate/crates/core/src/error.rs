use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// The solver hit its iteration cap. `best` is the last iterate.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("undefined spectrum: {0}")]
    UndefinedSpectrum(String),

    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("instant {index}: {source}")]
    AtInstant {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Broad failure class, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Network,
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation(_)
            | Error::Degenerate(_)
            | Error::Parse { .. }
            | Error::Unsupported(_)
            | Error::Io { .. }
            | Error::Json(_) => ErrorKind::Input,
            Error::Numerical(_) | Error::NonConvergence { .. } | Error::Infeasible(_) | Error::UndefinedSpectrum(_) => {
                ErrorKind::Numerical
            }
            Error::Network(_) => ErrorKind::Network,
            Error::AtInstant { source, .. } => source.kind(),
        }
    }
}
