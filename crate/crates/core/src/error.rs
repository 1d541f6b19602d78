use thiserror::Error;

/// Errors raised by geometric and spectral operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("point outside chart domain: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Precondition(String),
    #[error("degenerate plane: vectors are (nearly) linearly dependent")]
    DegeneratePlane,
    #[error("{what} did not converge (residual {residual:e})")]
    Convergence { what: String, residual: f64 },
    #[error("no convergence over schedule; trailing gaps {gaps:?}")]
    NonConvergence { gaps: Vec<f64> },
    #[error("conjugate point at t = {t}")]
    ConjugatePoint { t: f64 },
    #[error("trivial initial data")]
    TrivialInitialData,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("{failed} of {total} evaluations failed: {first}")]
    Partial { failed: usize, total: usize, first: String },
}

pub type Result<T> = std::result::Result<T, GeomError>;
