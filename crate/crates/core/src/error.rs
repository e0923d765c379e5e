use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("sentence range {start}..={end} out of bounds for document with {len} sentences")]
    RangeOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("feature vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("null class is not a training target")]
    NullTarget,

    #[error("target index {target} out of range for {n_outputs} outputs")]
    TargetOutOfRange { target: usize, n_outputs: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("empty candidate label set")]
    EmptyCandidates,

    #[error("candidate label {label} out of range for {n_labels} labels")]
    CandidateOutOfRange { label: usize, n_labels: usize },

    #[error("brute-force enumeration supports at most {max} sentences, got {got}")]
    TooLongForBruteForce { max: usize, got: usize },

    #[error(
        "no admissible combination after {retries} draws; admissible label sets: {admissible}"
    )]
    NoAdmissibleCombination { retries: usize, admissible: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("segments do not tile 1..={n}: {reason}")]
    NotTiling { n: usize, reason: String },

    #[error("AUC undefined: {0}")]
    DegenerateAuc(&'static str),

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("document {0:?} has no labels")]
    Unlabeled(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad model file: {0}")]
    BadModelFile(String),

    #[error("unsupported model file version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
