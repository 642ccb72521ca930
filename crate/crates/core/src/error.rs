use thiserror::Error;

/// Errors produced by the solver and its supporting modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sigma2[{index}] = {value} must be finite and strictly positive")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("the Pfaffian system is singular at r = 0")]
    SingularRadius,
    #[error("series did not converge within total degree {max_total_degree}")]
    NoConvergence { max_total_degree: usize },
    #[error("step size underflow at r = {radius:e}")]
    StepUnderflow { radius: f64 },
    #[error("step budget exhausted at r = {radius:e}")]
    StepBudgetExceeded { radius: f64 },
    #[error("non-finite state during integration at r = {radius:e}")]
    OverflowUnrecoverable { radius: f64 },
    #[error("top lambda group (multiplicity {m}) is not separated from the rest")]
    GroupSeparationTooSmall { m: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

impl Error {
    /// Short machine-readable name, used by the CLI diagnostic field.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonPositiveVariance { .. } => "NonPositiveVariance",
            Error::NonFinite(_) => "NonFinite",
            Error::SingularRadius => "SingularRadius",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::StepBudgetExceeded { .. } => "StepBudgetExceeded",
            Error::OverflowUnrecoverable { .. } => "OverflowUnrecoverable",
            Error::GroupSeparationTooSmall { .. } => "GroupSeparationTooSmall",
            Error::InvalidOptions(_) => "InvalidOptions",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
