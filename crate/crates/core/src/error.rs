use thiserror::Error;

use crate::reduced::ConstraintCopyId;

/// Errors produced anywhere in the estimator pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("assignment has {got} entries but the instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("assignment value {value} at variable {var} is outside the alphabet of size {sigma}")]
    SymbolOutOfRange { var: usize, value: usize, sigma: usize },

    #[error("instance has no constraints")]
    EmptyInstance,

    #[error("{what}: {size} exceeds the limit of {limit}")]
    TooLarge { what: &'static str, size: u128, limit: u128 },

    #[error("constraint {index} has arity {arity}, larger than the target arity {k}")]
    ArityTooLarge { index: usize, arity: usize, k: usize },

    #[error("variable {var} is out of range for an instance with {n} variables")]
    VariableOutOfRange { var: usize, n: usize },

    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("unknown constraint copy {0}")]
    UnknownConstraintCopy(ConstraintCopyId),

    #[error("neighborhood ball contains no variable copies")]
    EmptyBall,

    #[error("no recorded degree for variable copy v{parent}.{copy}")]
    MissingDegree { parent: u32, copy: u32 },

    #[error("degree estimate {value} for variable {var} is outside (1 ± {eps}) * {degree}")]
    OutOfBand { var: usize, value: usize, degree: usize, eps: f64 },

    #[error("streaming reduction terminated: resampling probability {probability} > 1 for variable {var}")]
    Terminated { var: u32, probability: f64 },

    #[error("sketch space {used} exceeded the cap of {cap} entries")]
    SpaceCapExceeded { used: usize, cap: usize },

    #[error("every m-guessing copy was terminated")]
    AllCopiesTerminated,

    #[error("the m-guessing copy for m = {m} (interval {lo}..{hi}) was terminated")]
    SelectedCopyTerminated { m: usize, lo: usize, hi: usize },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
