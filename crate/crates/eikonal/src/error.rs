//! Error type shared by all analysis operations.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum EikonalError {
    /// The gradient of the initial datum vanishes (up to the configured
    /// threshold) at a point where a nonzero gradient is required.
    #[error("degenerate gradient (|Dg| = {norm:.3e} <= {threshold:.3e}) at base point")]
    DegenerateGradient { norm: f64, threshold: f64 },

    /// A query ball (or search region) leaves the validity box of the field.
    #[error("ball of radius {radius} centered at {center:?} leaves the field bounds")]
    OutOfBounds { center: Vec<f64>, radius: f64 },

    /// A characteristic direction was supplied where it is not allowed, or
    /// has invalid length.
    #[error("invalid characteristic direction: {reason}")]
    InvalidDirection { reason: String },

    /// Second derivatives were requested from a field that is only C1.
    #[error("operation requires a C2 field: {0}")]
    NotC2(&'static str),

    /// The characteristic Jacobian I + t A is singular at the requested time.
    #[error("characteristic jacobian singular at t = {t}")]
    SingularJacobian { t: f64 },

    /// Gradient values of the minimizers straddle the merge tolerance, so the
    /// differentiable/nondifferentiable dichotomy cannot be resolved.
    #[error("gradient values straddle the merge tolerance; verdict ambiguous")]
    AmbiguousGradient,

    /// A precondition on an operation's inputs was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, EikonalError>;
