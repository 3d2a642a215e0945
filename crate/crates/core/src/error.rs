use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the extraction and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("span ({start}, {end}) out of range for {len} rows")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("overlapping occurrence spans across entities")]
    OverlappingSpans,
    #[error("context overflow: marked occurrences need {needed} tokens, window holds {available}")]
    ContextOverflow { needed: usize, available: usize },
    #[error("undefined coverage: gold set is empty")]
    UndefinedCoverage,
    #[error("degenerate graph: total edge weight is zero")]
    DegenerateGraph,
    #[error("degenerate null distribution: standard deviation is zero")]
    DegenerateNull,
    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Diverged {
        epoch: usize,
        step: usize,
        detail: String,
    },
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error("unknown backbone `{0}`")]
    UnknownBackbone(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("llm client error: {0}")]
    Llm(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
