use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("LD coefficient {delta} outside feasible range [{min}, {max}]")]
    InfeasibleDelta { delta: f64, min: f64, max: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported design: {0}")]
    Unsupported(String),

    #[error("integration did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Integration { estimate: f64, tolerance: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("power target {target} unattainable: {reason}")]
    Unattainable { target: f64, reason: String },

    #[error(
        "rejection sampling gave up after {attempts} proposals \
         ({accepted} accepted, acceptance rate {acceptance_rate:e})"
    )]
    RejectionFailure {
        attempts: u64,
        accepted: u64,
        acceptance_rate: f64,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. }
                | Error::NoRoot(_)
                | Error::Infeasible(_)
                | Error::Unattainable { .. }
                | Error::RejectionFailure { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
