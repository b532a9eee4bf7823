//! Crate-wide error type.

/// Everything that can go wrong when building meshes, assembling, solving,
/// or running the flow. Variants are grouped so callers can map them onto
/// coarse exit categories (bad input vs. numerical failure).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Precondition violation on a function argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A cell could not be assembled (degenerate or negatively oriented).
    #[error("assembly failed on cell {cell}: {detail}")]
    Assembly { cell: usize, detail: String },

    /// Scenario or boundary configuration does not make sense.
    #[error("configuration error: {0}")]
    Config(String),

    /// Iterative solver ran out of iterations.
    #[error("cg failed to converge after {iters} iterations, relative residual {rel_residual:.3e}")]
    SolverConvergence {
        iters: usize,
        rel_residual: f64,
        /// Relative residual after each iteration, for diagnosis.
        history: Vec<f64>,
    },

    /// The operator handed to cg turned out not to be positive definite.
    #[error("operator is not positive definite: curvature {curvature:.3e} at iteration {iter}")]
    SolverIndefinite { iter: usize, curvature: f64 },

    /// Newton loop in the implicit s-update failed to converge.
    #[error("newton iteration for the s-update diverged: {0}")]
    NewtonDivergence(String),

    /// A flow step failed; wraps the underlying cause.
    #[error("flow step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by bad input or configuration rather than by
    /// numerical breakdown.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
