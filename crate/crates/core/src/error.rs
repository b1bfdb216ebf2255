use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unreadable input stream: {0}")]
    Stream(#[source] std::io::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("filter requires keywords")]
    EmptyKeywords,

    #[error("{0} unresolved reference(s) in subset; rebuild with skip-unresolved to proceed")]
    Unresolved(usize),

    #[error("unsupported {what} version {found} (this build reads version {expected})")]
    VersionMismatch {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("corrupt {what} file: {reason}")]
    Corrupt { what: &'static str, reason: String },

    #[error("ontology violation: {0}")]
    Ontology(String),

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nothing to index")]
    NothingToIndex,

    #[error("store empty")]
    StoreEmpty,

    #[error("embedding dimension changed from {expected} to {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("store was built with embedder `{store}` but `{configured}` is configured")]
    EmbedderMismatch { store: String, configured: String },

    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(&'static str),

    #[error("endpoint error: {0}")]
    Endpoint(String),

    #[error("import record {record}: {reason}")]
    Import { record: usize, reason: String },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
