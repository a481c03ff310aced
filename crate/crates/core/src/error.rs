use crate::graph::GraphClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown label: {0}")]
    UnknownLabel(String),

    #[error("overlapping sets: {0}")]
    OverlappingSets(String),

    #[error("expected {expected}, graph classifies as {actual}")]
    ClassMismatch {
        expected: &'static str,
        actual: GraphClass,
    },

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("missing parameter: {0}")]
    MissingParam(String),

    #[error("premise failure: {0}")]
    Premise(String),

    #[error("{0}")]
    Invalid(String),
}
