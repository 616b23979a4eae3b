use thiserror::Error;

/// Errors raised by the distribution, oracle, and training code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KsError {
    /// An argument violated the operation's precondition.
    #[error("{op}: {requirement}, got {value}")]
    Domain {
        op: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },

    #[error("non-finite value at parameter index {index}")]
    NonFiniteParam { index: usize },

    /// A finite-difference stencil point evaluated to a non-finite value.
    #[error("non-finite function value in finite-difference stencil for {coordinate} at {at}")]
    Stencil { coordinate: &'static str, at: f64 },

    #[error("tape already consumed by a backward pass")]
    TapeConsumed,

    #[error("quadrature did not converge: estimate {estimate}, error bound {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("invalid parameter file: {0}")]
    Format(String),
}

pub type Result<T, E = KsError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(op: &'static str, requirement: &'static str, value: f64) -> Result<T> {
    Err(KsError::Domain {
        op,
        requirement,
        value,
    })
}
