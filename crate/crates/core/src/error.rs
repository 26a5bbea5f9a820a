use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes. The CLI maps each to its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Capacity,
    Guard,
    Search,
    Estimation,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be in 2..=36, got {0}")]
    AlphabetSize(u32),
    #[error("symbol {symbol} is not below alphabet size {m}")]
    Symbol { symbol: u32, m: u32 },
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: u32, right: u32 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} is outside 1..={len}")]
    OutOfRange { index: u64, len: u64 },
    #[error("position {requested} exceeds materialization cap {cap}")]
    Capacity { requested: String, cap: u64 },
    #[error("number with ~{digits} decimal digits exceeds digit cap {cap}")]
    DigitCap { digits: u64, cap: u64 },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("insertion events out of order at event {index}")]
    EventOrder { index: usize },
    #[error("base word too short: need {needed} symbols, have {have}")]
    BaseTooShort { needed: u64, have: u64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("target has dimension 0: {0}")]
    DimensionZero(String),
    #[error("outside proof-case table: {0}")]
    OutsideCaseTable(String),
    #[error("search for {what} exceeded cap {cap}")]
    SearchCap { what: String, cap: u64 },
    #[error("estimation impossible: {0}")]
    Estimation(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Capacity { .. } | Error::DigitCap { .. } | Error::BaseTooShort { .. } => {
                ErrorKind::Capacity
            }
            Error::DimensionZero(_) | Error::OutsideCaseTable(_) => ErrorKind::Guard,
            Error::SearchCap { .. } => ErrorKind::Search,
            Error::Estimation(_) => ErrorKind::Estimation,
            _ => ErrorKind::Input,
        }
    }
}
