use thiserror::Error;

/// Errors raised by the estimation, selection and benchmarking routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel order {0}: must be between 1 and {max}", max = crate::kernel::MAX_ORDER)]
    InvalidOrder(u32),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("value {value} lies on or outside the support {support}")]
    OutsideSupport { value: f64, support: String },

    #[error("knot grid is not uniformly spaced (gap {gap} at index {index}, expected {expected})")]
    NonUniformGrid {
        index: usize,
        gap: f64,
        expected: f64,
    },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("sign domain: {0}")]
    SignDomain(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}
