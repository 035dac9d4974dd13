use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("invalid corpus filter: {0}")]
    InvalidFilter(String),

    #[error("empty sentence")]
    EmptySentence,

    #[error("parse provider failed on sentence {sentence:?}: {message}")]
    Parse { sentence: String, message: String },

    #[error("overlapping noun chunks {first:?} and {second:?}")]
    OverlappingSpans {
        first: (usize, usize),
        second: (usize, usize),
    },

    #[error("sentence has {tokens} tokens, encoder accepts at most {max}")]
    SentenceTooLong { tokens: usize, max: usize },

    #[error("no attention available for sentence: {0}")]
    MissingAttention(String),

    #[error("attention shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("empty string cannot be canonicalized")]
    EmptyCanonical,

    #[error("benchmark line {line}: {message}")]
    Benchmark { line: usize, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors that only invalidate the current sentence; extraction skips
    /// the sentence and carries on with the rest of the abstract.
    pub fn is_sentence_level(&self) -> bool {
        matches!(
            self,
            Error::EmptySentence
                | Error::Parse { .. }
                | Error::OverlappingSpans { .. }
                | Error::SentenceTooLong { .. }
                | Error::MissingAttention(_)
                | Error::Shape(_)
        )
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
