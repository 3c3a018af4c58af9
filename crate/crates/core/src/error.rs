use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outcome space of 2^{bits} exceeds the 2^24 cap")]
    TooLarge { bits: u32 },
    #[error("budget exceeded: {required} steps required, budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("target unreachable after {attempts} attempts (best measured {best})")]
    TargetUnreachable { attempts: u32, best: f64 },
    #[error("constraint violated: {}", .0.join("; "))]
    ConstraintViolated(Vec<String>),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
