use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported EDGE_WEIGHT_TYPE `{0}` (only EUC_2D is supported)")]
    UnsupportedEdgeWeightType(String),

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("DIMENSION is {declared} but {found} coordinate rows were read")]
    DimensionMismatch { declared: usize, found: usize },

    #[error("{what} = {value} is outside the allowed range {min}..={max}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("{what}: n = {n} exceeds the limit of {limit}")]
    TooLarge { what: &'static str, n: usize, limit: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("arc ({0}, {1}) is not in the candidate arc set")]
    UnknownArc(usize, usize),

    #[error("CAF neighbour count k = {k} must lie in 1..={max}")]
    BadK { k: usize, max: usize },

    #[error("arc set is not symmetric: ({0}, {1}) present without its reverse")]
    AsymmetricArcSet(usize, usize),

    #[error("no feasible solution exists")]
    Infeasible,

    #[error("time budget of {0:?} exhausted before any feasible solution was found")]
    BudgetExhausted(Duration),

    #[error("solution is not degree feasible")]
    NotDegreeFeasible,

    #[error("assignment has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
}
