use thiserror::Error;

/// Errors produced by the solvers, evaluators and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("simplex iteration limit ({0}) exceeded")]
    IterationLimit(usize),

    #[error("numerical breakdown in simplex: {0}")]
    Numerical(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("routing infeasible for user {user}")]
    RoutingInfeasible { user: u32 },

    #[error("rounding to a binary placement failed: {0}")]
    RoundingFailure(String),

    #[error("no admissible assignment for row {row}")]
    NoAssignment { row: usize },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("surrogate LP failed at iteration {iteration}: {source}")]
    Surrogate {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("workflow aborted: {0}")]
    Workflow(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
