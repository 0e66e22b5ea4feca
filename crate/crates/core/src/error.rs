use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("horizon {horizon} is not an integer multiple of step {step} (N = {steps:.6})")]
    GridMismatch { horizon: f64, step: f64, steps: f64 },

    #[error("degenerate horizon: thresholds are undefined when T - t = 0")]
    DegenerateHorizon,

    #[error("cannot aggregate an empty sample")]
    EmptySample,

    #[error("no theta parameters available for cell gamma={gamma}, xi={xi}")]
    MissingTheta { gamma: f64, xi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}
