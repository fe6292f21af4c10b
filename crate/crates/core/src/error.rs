//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failures surfaced by the toolkit.
///
/// Variants are grouped so callers (notably the CLI) can map them onto the
/// stable exit-code contract: data errors, backend/model errors, and
/// configuration errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no records in {path}")]
    EmptyCorpus { path: PathBuf },

    #[error("duplicate tweet id {id:?} at record {line}")]
    DuplicateId { id: String, line: usize },

    #[error("class {label:?} has {count} members, fewer than k = {k} folds")]
    Stratification { label: String, count: usize, k: usize },

    #[error("empty vocabulary (min_frequency = {min_frequency})")]
    EmptyVocabulary { min_frequency: usize },

    #[error("{path}:{line}: expected embedding dimension {expected}, found {found}")]
    RaggedEmbedding {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("negative feature value {value} at row {row}, feature {index}")]
    NegativeFeature { row: usize, index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training diverged (non-finite loss); config: {config}")]
    Divergence { config: String },

    #[error("model is not trained")]
    Untrained,

    #[error("backend {name:?}: {message}")]
    Backend { name: String, message: String },

    #[error("unknown data format {0:?} (expected csv, tsv, or jsonl)")]
    UnknownFormat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),
}

impl Error {
    /// Convenience constructor for io errors with path context.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Convenience constructor for invalid-parameter errors.
    pub fn invalid(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }
}
