use thiserror::Error;

/// Structural violations raised while building sentences or graphs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("token position must be >= 1, got {position}")]
    InvalidPosition { position: usize },

    #[error("token at position {position} has an empty form")]
    EmptyForm { position: usize },

    #[error("token positions must be dense: expected {expected} at index {index}, got {found}")]
    NonDensePositions {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("arc head and dependent are both {position}")]
    SelfLoop { position: usize },

    #[error("arc dependent cannot be the ROOT node")]
    DependentIsRoot,

    #[error("arc head {head} out of range for sentence of length {n}")]
    HeadOutOfRange { head: usize, n: usize },

    #[error("arc dependent {dependent} out of range for sentence of length {n}")]
    DependentOutOfRange { dependent: usize, n: usize },

    #[error("arc {head} -> {dependent} already present")]
    DuplicateArc { head: usize, dependent: usize },

    #[error("arc from ROOT to {dependent} must carry the reserved label, got {label:?}")]
    RootArcLabel { dependent: usize, label: String },

    #[error("label {label:?} is reserved for arcs from ROOT")]
    ReservedLabel { label: String },

    #[error("arc set contains a cycle")]
    Cyclic,
}
