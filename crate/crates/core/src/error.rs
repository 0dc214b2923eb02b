use std::fmt;
use thiserror::Error;

use crate::subsets::ids_from_mask;

/// Why a truth table failed semicoherence validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemicoherenceDefect {
    /// The empty set evaluates to 1; a failed system cannot work.
    EmptySetAlive,
    /// The full component set evaluates to 0; an intact system must work.
    FullSetDead,
    /// A witness pair lower ⊂ upper with phi(lower) = 1 and phi(upper) = 0.
    NotMonotone { lower: u32, upper: u32 },
}

impl fmt::Display for SemicoherenceDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemicoherenceDefect::EmptySetAlive => write!(f, "phi(empty set) = 1"),
            SemicoherenceDefect::FullSetDead => write!(f, "phi(full set) = 0"),
            SemicoherenceDefect::NotMonotone { lower, upper } => write!(
                f,
                "phi({:?}) = 1 but phi({:?}) = 0",
                ids_from_mask(*lower),
                ids_from_mask(*upper)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("structure function is not semicoherent: {0}")]
    NotSemicoherent(SemicoherenceDefect),
    #[error("{what} = {got} exceeds the supported limit {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("path set list is empty")]
    EmptyPathList,
    #[error("path set {path:?} mentions components outside 1..={n}")]
    PathOutOfRange { path: Vec<usize>, n: usize },
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subset {ids:?} mentions components outside 1..={n}")]
    SubsetOutOfRange { ids: Vec<usize>, n: usize },
    #[error("set list is empty")]
    EmptySetList,
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("gave up after {0} consecutive resamples; the lifetime model keeps producing ties or non-positive times")]
    TieResampleExhausted(u32),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
