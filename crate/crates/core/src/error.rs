use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by policies, the environment, metrics and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("policy needs at least one arm")]
    NoArms,
    #[error("arm {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },
    #[error("epsilon must lie in [0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("transmit power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("power grid needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("round {t} outside 1..={horizon}")]
    RoundOutOfRange { t: u64, horizon: u64 },
    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing to aggregate")]
    EmptyRuns,
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by a bad configuration rather than a runtime fault.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::LengthMismatch { .. } | Error::EmptyRuns)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
