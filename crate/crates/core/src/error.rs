use thiserror::Error;

/// Errors surfaced by ingestion, lexicon loading, query parsing, and scoring.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A malformed record, naming the file and line it came from.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A record referencing an undeclared video, class, or clip.
    #[error("reference error: {0}")]
    Reference(String),

    /// A word definition that failed validation or compilation.
    #[error("lexicon error in {word:?}: {msg}")]
    Lexicon { word: String, msg: String },

    /// A sentential query that could not be tokenized or parsed.
    #[error("query error: {0}")]
    Query(String),

    /// An internal contract violated by a caller (mismatched lengths, arities).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An invalid synthetic-scene specification.
    #[error("scene spec error: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
