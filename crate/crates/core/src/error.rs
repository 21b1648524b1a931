use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Invalid inputs ([`Error::InvalidParameter`], [`Error::Domain`]) are kept
/// apart from failures of an otherwise valid computation so that callers can
/// map them to different exit statuses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("`{name}` = {value} lies outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("perturbation breakdown: {0}")]
    PerturbationBreakdown(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_) | Error::PerturbationBreakdown(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
