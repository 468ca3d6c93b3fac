use thiserror::Error;

/// Errors raised by model construction, evaluation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("damage variable non-positive at node {node} (z = {value})")]
    DamageNonPositive { node: usize, value: f64 },
    #[error("negative damage argument {0}")]
    NegativeDamage(f64),
    #[error("tensor is not trace-free (tr = {0})")]
    TraceViolation(f64),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("step {step} not accepted: {reason}")]
    StepRejected { step: usize, reason: String },
    #[error("inconsistent regime/parameters: {0}")]
    Regime(String),
    #[error("config error at key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
