use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("depth {requested} exceeds working depth {limit}")]
    DepthExceeded { requested: u32, limit: u32 },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid tree map: {0}")]
    InvalidMap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot normalize the zero measure")]
    ZeroMeasure,

    #[error("point sequence is not injective: terms {first} and {second} coincide")]
    NotInjective { first: usize, second: usize },

    #[error("convergence check failed: {0}")]
    Convergence(String),

    #[error("tail certificate error: {0}")]
    Certificate(String),

    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no preimage of node {target} at depth {depth}")]
    NoPreimage { target: String, depth: u32 },

    #[error("invalid split index {index} at step {step} (stage has {size} points)")]
    InvalidSplit { step: usize, index: usize, size: usize },

    #[error("classification inconclusive at budget {budget}")]
    Inconclusive { budget: usize },

    #[error("measure has an atom: {0}")]
    AtomicMeasure(String),

    #[error("uniformly distributed sequence exhausted after {emitted} points at depth {depth}")]
    Exhausted { emitted: usize, depth: u32 },

    #[error("schedule search failed at k = {k} (searched up to {bound})")]
    ScheduleSearch { k: usize, bound: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
