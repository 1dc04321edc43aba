use thiserror::Error;

/// Errors shared across the set-computation, estimation and control layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("negative radius entry in interval data")]
    NegativeRadius,

    #[error("lower bound exceeds upper bound in interval data")]
    InvertedBounds,

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error("polytope is unbounded")]
    UnboundedPolytope,

    #[error("intersection of member hulls is empty")]
    EmptyIntersection,

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("horizon split H={h} outside 1..={n}")]
    BadHorizonSplit { h: usize, n: usize },

    #[error("scenario tree would hold {leaves} leaves (cap {cap})")]
    TooManyLeaves { leaves: usize, cap: usize },

    #[error("no feasible input found at horizon 1: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
