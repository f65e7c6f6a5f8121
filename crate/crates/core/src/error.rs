use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (zero field, bad length, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A dense or exact method was asked to handle more than it is allowed to.
    #[error("size limit exceeded: {what} is {value}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("SVD did not converge{}", bond_context(.bond))]
    SvdFailure { bond: Option<usize> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file contents (bad header, non-numeric entry, wrong rank, ...).
    #[error("format error: {0}")]
    Format(String),
}

fn bond_context(bond: &Option<usize>) -> String {
    match bond {
        Some(b) => format!(" at bond {b}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a bond index to an SVD failure raised by a bare matrix routine.
    pub(crate) fn at_bond(self, bond: usize) -> Self {
        match self {
            Error::SvdFailure { bond: None } => Error::SvdFailure { bond: Some(bond) },
            other => other,
        }
    }

    /// Coarse error class, used by the CLI for exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) | Error::Shape(_) | Error::Io { .. } | Error::Format(_) => {
                ErrorKind::Input
            }
            Error::SizeLimit { .. } | Error::SvdFailure { .. } | Error::Numerical(_) => {
                ErrorKind::Numeric
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numeric,
}

pub type Result<T> = std::result::Result<T, Error>;
