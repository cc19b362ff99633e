use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("empty vocabulary (min_count {min_count})")]
    EmptyVocabulary { min_count: u64 },

    #[error("invalid period spec: {0}")]
    InvalidPeriodSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inconsistent counts: {0}")]
    Inconsistent(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("no training data")]
    NoTrainingData,

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("unknown word {0:?}")]
    UnknownWord(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("cosine of a zero vector is undefined")]
    ZeroVector,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error(
        "{method} vectors for periods {first} and {second} live in independently trained spaces; align them first"
    )]
    Unaligned {
        method: String,
        first: String,
        second: String,
    },

    #[error("probe words absent from period {period}: {}", words.join(", "))]
    MissingProbeWords { period: String, words: Vec<String> },

    #[error("vocabulary size {size} exceeds the configured cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("empty evaluation set: {0}")]
    EmptyEvaluation(String),

    #[error("unsupported format version {found:?} (expected {expected:?})")]
    VersionMismatch { expected: String, found: String },

    #[error("truncated file: expected {expected} records, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid file: {0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
