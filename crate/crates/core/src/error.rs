use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rational literal `{0}`")]
    ParseRational(String),

    #[error("point set must be nonempty")]
    EmptyPointSet,

    #[error("{value} is not a multiple of 2^{exponent}")]
    NotAligned { value: String, exponent: i32 },

    #[error("level index {index} out of range (certificate has {levels} levels)")]
    LevelOutOfRange { index: usize, levels: usize },

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("infeasible sequence at index {index}: {reason}")]
    Infeasible { index: usize, reason: String },

    #[error("sequence violates spacing at index {index}: {reason}")]
    Spacing { index: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("input not band-limited to the admissible half band ({0})")]
    Aliasing(String),

    #[error("overlapping intervals: {0}")]
    Overlap(String),

    #[error("zero norm in {0}")]
    ZeroNorm(&'static str),

    #[error("window undersampled at scale j = {j}: 2^-j below the frequency spacing 1/L = {spacing}")]
    Undersampled { j: i32, spacing: f64 },

    #[error("exponent triple ({p1}, {p2}, {p3}) outside the local L2 range")]
    Exponents { p1: f64, p2: f64, p3: f64 },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
