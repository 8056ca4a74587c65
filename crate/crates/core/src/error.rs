use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A weight system or problem could not be assembled.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: estimated error {estimate:e} > tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    /// The moment system for this multi-index is singular.
    #[error("multi-index {multi_index:?} is not normal (condition estimate {condition:e})")]
    NonNormalIndex {
        multi_index: Vec<usize>,
        condition: f64,
    },

    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("root refinement failed: |P(x)| = {residual:e} at x = {root}")]
    RootRefinement { root: f64, residual: f64 },

    #[error("singular energy: coincident atoms at {0} with positive mass")]
    SingularEnergy(f64),

    #[error("interaction matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("sampler initialization failed: {0}")]
    Initialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
