use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The adaptive integrator could not continue: the step size underflowed,
    /// the step budget ran out, or the state stopped being finite.
    #[error("integration failed for column m={column} at t={t}: {reason}")]
    IntegrationFailure {
        column: usize,
        t: f64,
        reason: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
