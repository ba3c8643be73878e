use thiserror::Error;

/// Errors shared by every module of the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown feature `{name}`")]
    UnknownFeature { name: String },
    #[error("feature universe mismatch")]
    UniverseMismatch,
    #[error("universe has {got} features; the enumeration bound is {bound}")]
    TooManyFeatures { got: usize, bound: usize },
    #[error("invalid feature name `{name}`: expected an ASCII identifier")]
    BadFeatureName { name: String },
    #[error("duplicate feature `{name}`")]
    DuplicateFeature { name: String },
    #[error("configuration {{{config}}} is not valid under the feature model")]
    InvalidConfiguration { config: String },
    #[error("ill-formed model: {0}")]
    IllFormed(String),
    #[error("dangling reference `{0}`")]
    DanglingRef(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("unknown analysis `{0}`")]
    UnknownAnalysis(String),
    #[error("data reference resolved to the wrong shape: expected {expected}, got {got}")]
    DataShape { expected: &'static str, got: String },
    #[error("corrupt evidence: {0}")]
    CorruptEvidence(String),
    #[error("instantiation refused: {0}")]
    Refused(String),
    #[error("invalid document: {0}")]
    Document(String),
    #[error("node `{0}` not found")]
    NodeNotFound(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
