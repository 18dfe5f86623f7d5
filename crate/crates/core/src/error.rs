use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing or unreadable input {path}: {reason}")]
    Ingest { path: PathBuf, reason: String },

    #[error("format error in {source_name}:{line}: {reason}")]
    Format {
        source_name: String,
        line: usize,
        reason: String,
    },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    Numeric { op: &'static str },

    #[error("InfoNCE needs at least two candidates, got {got}; use the negative-free loss instead")]
    NeedNegatives { got: usize },

    #[error("local-local contrast needs aligned nodes, but graph {graph} has none in common between views")]
    Alignment { graph: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("stratification failed: class {class} has {count} samples for {folds} folds")]
    Stratification {
        class: usize,
        count: usize,
        folds: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(source_name: impl Into<String>, line: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
