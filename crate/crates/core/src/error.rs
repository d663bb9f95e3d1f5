use std::path::PathBuf;

use thiserror::Error;

use crate::chem::SmilesError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left_name} is {left:?}, {right_name} is {right:?}")]
    Shape {
        op: &'static str,
        left_name: &'static str,
        left: (usize, usize),
        right_name: &'static str,
        right: (usize, usize),
    },

    #[error("invalid state: {0}")]
    State(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch} (last finite epoch: {last_finite:?})")]
    Diverged {
        epoch: usize,
        last_finite: Option<usize>,
    },

    #[error(transparent)]
    Smiles(#[from] SmilesError),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("descriptor convention mismatch: {0}")]
    Convention(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by arithmetic (divergence, NaN/inf), as
    /// opposed to bad input or configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Diverged { .. })
    }
}
