use crate::items::ItemSet;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("hull oracle assumption violated at T={set:?}: {detail}")]
    HullAssumption { set: ItemSet, detail: String },

    #[error("LP iteration cap of {0} exceeded")]
    IterationLimit(usize),

    #[error("LP is {0}")]
    LpStatus(&'static str),

    #[error("target vector not dominated: coordinate {item} has y={target} > w={bound}")]
    NotDominated { item: usize, target: f64, bound: f64 },

    #[error("gross substitutes check failed: {0}")]
    NotGrossSubstitutes(String),

    #[error("transcript invariant violated: {0}")]
    Transcript(String),
}

pub type Result<T> = std::result::Result<T, Error>;
