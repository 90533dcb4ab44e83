use thiserror::Error;

/// Failures surfaced by the solvers and the command-line driver.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters or inputs outside the admissible set.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A state left the range on which the reaction term is defined.
    #[error("scheme violation: {0}")]
    SchemeViolation(String),

    /// A profile solution crossed the barrier curve on an interior sample.
    #[error("branch violation at y = {y:e}: Gamma - value = {gap:e}")]
    BranchViolation { y: f64, gap: f64 },

    /// The ODE integrator could not continue.
    #[error("integration failed at t = {t:e}: {reason}")]
    Integration { t: f64, reason: String },

    /// A compensated statistic is not flat enough to report a limit.
    #[error("asymptotic regime not reached: flatness {flatness:.4} exceeds {limit:.4}")]
    RegimeNotReached { flatness: f64, limit: f64 },

    /// Any other numerical breakdown.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-parsable tag used on the CLI error stream.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "E_INVALID",
            Error::SchemeViolation(_) => "E_SCHEME",
            Error::BranchViolation { .. } => "E_BRANCH",
            Error::Integration { .. } => "E_INTEGRATION",
            Error::RegimeNotReached { .. } => "E_REGIME",
            Error::Numerical(_) => "E_NUMERICAL",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }

    /// Exit status: 1 for usage/validation, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Json(_) | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
