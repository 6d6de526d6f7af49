use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("atom probability {0} is not positive")]
    NonpositiveProb(f64),
    #[error("probabilities sum to {0}, expected 1")]
    MassNotOne(f64),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid distortion function: {0}")]
    InvalidDistortion(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("premium principle applied to a risk with negative support (min atom {0})")]
    NegativeSupport(f64),
    #[error("claim size {0} is negative")]
    NegativeClaim(f64),
    #[error(
        "value function increases by {increase:e} between grid points {left} and {right} at stage {stage}; refine the grid or search"
    )]
    MonotonicityViolation {
        stage: usize,
        left: f64,
        right: f64,
        increase: f64,
    },
    #[error("value iteration did not reach tolerance within {iterations} iterations (last residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("value functions live on different grids")]
    GridMismatch,
    #[error("policy row infeasible at stage {stage}, state {state}: {reason}")]
    InfeasiblePolicyRow {
        stage: usize,
        state: f64,
        reason: String,
    },
    #[error("parameters outside the closed-form regime: {0}")]
    ParameterRegime(String),
    #[error("ruin bound requires value-at-risk at every stage")]
    NotVaRConfig,
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical procedure itself, as opposed to bad input.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::MonotonicityViolation { .. } | Error::MaxIterations { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
