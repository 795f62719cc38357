//! The crate-wide error type and result alias.

use std::fmt;

/// Errors produced by the solvers and constructors in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or solver was given arguments outside its documented domain.
    InvalidParameter(String),
    /// A mathematical operation was evaluated outside the region where it is defined.
    Domain(String),
    /// The ODE integrator stalled: the step underflowed before any termination
    /// condition was met.
    NonConvergence(String),
    /// Bisection could not find a sign-changing bracket within the search range.
    NoBracket(String),
    /// No curvature sign change exists in the sampled profile range.
    NoInflection(String),
    /// The explicit PDE step produced a non-finite or runaway field.
    Stability {
        /// Step size at which the failure occurred.
        dt: f64,
        /// What went non-finite or ran away.
        message: String,
    },
    /// An operation was applied to a profile with an incompatible classification
    /// or mismatched parameters.
    Mismatch(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::NonConvergence(m) => write!(f, "non-convergence: {m}"),
            Error::NoBracket(m) => write!(f, "no bracket: {m}"),
            Error::NoInflection(m) => write!(f, "no inflection: {m}"),
            Error::Stability { dt, message } => {
                write!(f, "stability failure at dt = {dt:e}: {message}")
            }
            Error::Mismatch(m) => write!(f, "mismatch: {m}"),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
