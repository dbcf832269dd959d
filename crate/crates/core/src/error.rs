use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("{op}: domain violation: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("{op}: index {index} out of range for length {len}")]
    Index {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("degenerate embedding: {0} has zero norm")]
    DegenerateEmbedding(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("token id {id} outside vocabulary of size {vocab}")]
    UnknownToken { id: usize, vocab: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no neighbor entry for image {0}")]
    MissingNeighbors(usize),
    #[error("unknown image id {0}")]
    UnknownImage(usize),
    #[error("unknown parameter {0}")]
    UnknownParam(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: u64, detail: String },
    #[error("retriever parameters changed during fine-tuning")]
    FreezeViolation,
}
