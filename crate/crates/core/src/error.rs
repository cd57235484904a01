use thiserror::Error;

/// Failure modes of the numerical pipeline.
///
/// The variants are grouped by what went wrong rather than where: callers
/// (notably the command-line front end) map each group to a distinct exit
/// status.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the model or of the numerics.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two inputs that must describe the same object disagree (grid size,
    /// bath size, ...).
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    /// The dynamics blew up or the Hamiltonian is not bounded from below.
    #[error("instability: {0}")]
    Instability(String),

    /// `U(t)` is (numerically) singular so the time-local generator does not
    /// exist at this time.
    #[error("retarded function singular at t = {time:.6e} (condition number {condition:.3e})")]
    Singular { time: f64, condition: f64 },

    /// A quadrature failed to converge or a monitored invariant drifted.
    #[error("numerical quality check failed: {0}")]
    NumericalQuality(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// `true` for errors caused by bad user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::Inconsistent(_))
    }

    /// `true` for blow-ups, unbounded Hamiltonians and singular propagators.
    pub fn is_instability(&self) -> bool {
        matches!(self, Error::Instability(_) | Error::Singular { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
