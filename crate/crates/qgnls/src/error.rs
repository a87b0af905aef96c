//! Crate-wide error type.

/// Convenience alias used by every fallible function in the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by graph construction, discretization, solvers and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structural problem in a metric graph (dangling endpoints, bad lengths, ...).
    #[error("graph: {0}")]
    Graph(String),

    /// Mesh construction or mesh/graph mismatch.
    #[error("mesh: {0}")]
    Mesh(String),

    /// Invalid or non-self-adjoint vertex condition.
    #[error("vertex condition: {0}")]
    Condition(String),

    /// Invalid user-supplied parameter (exponents, frequencies, grids, ...).
    #[error("invalid parameter: {0}")]
    Validation(String),

    /// A direct linear solve hit a (numerically) singular pivot.
    #[error("linear solve: {0}")]
    LinearSolve(String),

    /// An iterative solver ran out of its iteration budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Problem reading or writing files.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed graph description file.
    #[error("graph file: {0}")]
    Parse(String),
}
