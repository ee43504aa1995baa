//! Error type shared by every pipeline stage.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },

    #[error("line {line}: vote out of range for {field}: {value} (expected 0..=5)")]
    VoteOutOfRange {
        line: usize,
        field: &'static str,
        value: i64,
    },

    #[error("duplicate sample id: {id}")]
    DuplicateId { id: String },

    #[error("sample {id}: text is empty")]
    EmptyText { id: String },

    #[error("sample {id}: label kind does not match dataset mode")]
    MixedLabels { id: String },

    #[error("threshold {t} outside 1..=5")]
    InvalidThreshold { t: u8 },

    #[error("cannot split {n} samples; need at least 2")]
    TooFewSamples { n: usize },

    #[error("eval fraction {fraction} leaves an empty split for {n} samples")]
    DegenerateSplit { fraction: f64, n: usize },

    #[error("undersample target {target} exceeds population {n}")]
    TargetTooLarge { target: usize, n: usize },

    #[error("degenerate class: count0={count0}, count1={count1}")]
    DegenerateClass { count0: usize, count1: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("expected 6 per-emotion values, got {0}")]
    WrongArity(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged: loss is not finite at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("featurizer dim mismatch: model={model}, featurizer={featurizer}")]
    DimMismatch { model: usize, featurizer: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Distinguishes bad input (exit code 1) from failures at runtime (exit code 2).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Diverged { .. } | Error::Checkpoint(_) => false,
            Error::Stage { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}
