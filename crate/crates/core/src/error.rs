use std::path::PathBuf;

use thiserror::Error;

use crate::heads::{Geometry, HeadIndex};
use crate::solution::PruneSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry must have at least one layer and one head per layer, got {layers}x{heads}")]
    InvalidGeometry { layers: usize, heads: usize },

    #[error("head {index} is out of bounds for geometry {geometry}")]
    OutOfBounds { index: HeadIndex, geometry: Geometry },

    #[error("table oracle has no entry for mask {mask}")]
    TableMiss { mask: String },

    #[error("evaluator protocol error: {0}")]
    Protocol(String),

    #[error("evaluator transport failure: {0}")]
    Transport(#[source] std::io::Error),

    #[error("evaluator reported an error for request {id}: {message}")]
    Evaluator { id: u64, message: String },

    #[error("invalid oracle description: {0}")]
    InvalidOracle(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// An oracle failure in the middle of a search. The solution holds every
    /// iteration that completed before the failure.
    #[error("search aborted after {} completed iteration(s): {source}", partial.trace.len())]
    Aborted {
        #[source]
        source: Box<Error>,
        partial: Box<PruneSolution>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate in the accuracy evaluator.
    pub fn is_oracle_failure(&self) -> bool {
        match self {
            Error::TableMiss { .. }
            | Error::Protocol(_)
            | Error::Transport(_)
            | Error::Evaluator { .. }
            | Error::InvalidOracle(_) => true,
            Error::Aborted { source, .. } => source.is_oracle_failure(),
            _ => false,
        }
    }

    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidGeometry { .. } | Error::OutOfBounds { .. } => 2,
            Error::Invariant(_) => 4,
            Error::Aborted { source, .. } => source.exit_code(),
            e if e.is_oracle_failure() => 3,
            _ => 1,
        }
    }
}
