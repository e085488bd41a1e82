use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{malformed} of {lines} records in {path} are malformed (limit is 10%)")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        lines: usize,
    },

    #[error("invalid study window: {start} is after {end}")]
    InvalidWindow { start: String, end: String },

    #[error("vocabulary is empty after pruning ({candidates} candidate tokens, min_df={min_df}, max_df_ratio={max_df_ratio})")]
    EmptyVocabulary {
        candidates: usize,
        min_df: usize,
        max_df_ratio: f64,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lexicon {path} has no usable entries")]
    EmptyLexicon { path: PathBuf },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A document carries a topic assignment but no polarity label.
    #[error("document {doc_id} has a topic assignment but no polarity")]
    MissingPolarity { doc_id: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
