use thiserror::Error;

/// Errors raised by walkdim computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid IFS: {0}")]
    InvalidIfs(String),

    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("disconnected network: {0}")]
    Disconnected(String),

    #[error("point is not a vertex of the graph: ({0}, {1})")]
    NotAVertex(String, String),

    #[error("level mismatch: function lives on level {found}, expected {expected}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("renormalization did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("renormalization factor is not exact: {0}")]
    Unresolved(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable code used in CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::InvalidIfs(_) => "invalid_ifs",
            Error::BoundaryMismatch(_) => "boundary_mismatch",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Singular(_) => "singular",
            Error::Disconnected(_) => "disconnected",
            Error::NotAVertex(..) => "not_a_vertex",
            Error::LevelMismatch { .. } => "level_mismatch",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Unresolved(_) => "unresolved_renormalization",
            Error::Fit(_) => "fit",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
