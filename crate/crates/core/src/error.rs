use thiserror::Error;

/// Errors raised by the norm, geometry, bound and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinslerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The fundamental tensor and its derivatives are undefined at the zero vector.
    #[error("reference vector must be nonzero")]
    DegenerateReferenceVector,

    #[error("{what} did not converge (residual {residual:.3e})")]
    NumericalFailure { what: String, residual: f64 },

    #[error("trajectory left the chart domain at t = {time:.6}")]
    DomainEscape { time: f64 },

    #[error("sqrt(k) * r = {value:.6} is outside the comparison range (0, pi)")]
    OutOfComparisonRange { value: f64 },

    #[error("step majorant is unbounded: p = {p} < 2 with an atom at distance 0")]
    SingularMajorant { p: f64 },

    #[error("objective is not differentiable here: {0}")]
    NonDifferentiable(String),

    /// The descent inequality failed, so the step constant does not bound the Hessian.
    #[error("descent inequality violated at iteration {iteration} by {excess:.3e}; curvature bounds are inconsistent")]
    InconsistentStepConstant { iteration: usize, excess: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

impl FinslerError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FinslerError::InvalidInput(msg.into())
    }

    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            FinslerError::InvalidInput(_) | FinslerError::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FinslerError>;
