use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid sequence spec `{spec}`: {reason}")]
    SeqSpec { spec: String, reason: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("{0} and {1} are multiplicatively dependent")]
    Dependent(String, String),
    #[error("search for {what} gave up after {cap} steps")]
    SearchCap { what: String, cap: u64 },
    #[error("vertex budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("target truncation too shallow: {0}")]
    Truncation(String),
    #[error("ambiguous: {0}")]
    Ambiguous(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
