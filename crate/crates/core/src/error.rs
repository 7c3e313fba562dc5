use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate {kind} class name `{name}`")]
    DuplicateClassName { kind: &'static str, name: String },
    #[error("linker `{linker}` requires mentions but no mentions extractor is configured")]
    MissingMentionsExtractor { linker: String },
    #[error("configuration selects no pipeline stage")]
    EmptyConfig,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown {kind} component `{key}`")]
    UnknownComponent { kind: &'static str, key: String },
    #[error("invalid parameters for `{key}`: {message}")]
    InvalidParams { key: String, message: String },

    #[error("linker called without any configured entities")]
    NoEntitiesConfigured,
    #[error("relation extractor called without any configured relations")]
    NoRelationsConfigured,
    #[error("document {doc} carries no entity annotations")]
    MissingEntityAnnotations { doc: usize },
    #[error("knowledge base is empty")]
    EmptyKnowledgeBase,
    #[error("component `{stage}` broke its output contract: {message}")]
    ComponentContract { stage: &'static str, message: String },
    #[error("input {index} is not a text entry")]
    InvalidInput { index: usize },

    #[error("ensemble has no linkers or no description variants")]
    EmptyEnsemble,
    #[error("description variant {variant} does not cover the same entity names as variant 0")]
    InconsistentVariants { variant: usize },
    #[error("threshold {0} is outside its allowed range")]
    InvalidThreshold(f64),

    #[error("span [{start}, {end}) is invalid for text of {len} characters")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("spans [{}, {}) and [{}, {}) overlap", .first.0, .first.1, .second.0, .second.1)]
    OverlappingSpans { first: (usize, usize), second: (usize, usize) },
    #[error("relation references span [{start}, {end}) which is not in the entity layer")]
    DanglingRelation { start: usize, end: usize },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("split `{split}`, example {example}: span [{start}, {end}) out of bounds")]
    SpanOutOfBounds { split: String, example: usize, start: usize, end: usize },
    #[error("split `{split}`, example {example}: label `{label}` is not in the class catalog")]
    UnknownClass { split: String, example: usize, label: String },
    #[error("unknown split `{0}`")]
    UnknownSplit(String),
    #[error("gold/prediction alignment error: {0}")]
    Alignment(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
