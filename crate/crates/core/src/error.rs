use thiserror::Error;

/// Errors raised by the model, the plant simulator and the estimator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("rotor speed fell to {omega:e} rad/s at t = {t:.6} s (floor {floor:e})")]
    RotorSpeedFloor { t: f64, omega: f64, floor: f64 },

    #[error("information matrix lost positive definiteness at t = {t:.6} s (min eigenvalue {min_eig:e})")]
    InformationMatrixIndefinite { t: f64, min_eig: f64 },

    #[error("non-finite value in {what} at t = {t:.6} s")]
    NonFinite { what: &'static str, t: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }

    /// True for failures of the numerical integration (as opposed to bad input).
    pub fn is_numeric_abort(&self) -> bool {
        !matches!(self, Error::InvalidArgument { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
