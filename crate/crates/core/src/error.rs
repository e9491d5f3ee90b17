use thiserror::Error;

/// Errors surfaced by loaders, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty edge list: no usable edges found")]
    EmptyGraph,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("{what} limit of {limit} exceeded: {detail}")]
    LimitExceeded {
        what: &'static str,
        limit: u64,
        detail: String,
    },

    #[error("blocking cannot make progress: {0}")]
    Stuck(String),

    #[error("baseline infeasible: {0}")]
    InfeasibleBaseline(String),

    #[error("oracle precondition violated: {0}")]
    OraclePrecondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
