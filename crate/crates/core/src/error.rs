use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),

    #[error("need at least 1 row")]
    Empty,

    #[error("row {row}: expected {expected} probabilities, got {got}")]
    RowWidth { row: usize, expected: usize, got: usize },

    #[error("row {row}: probability {value} at class {class} is outside [0, 1] or not finite")]
    BadProbability { row: usize, class: usize, value: f64 },

    #[error("row {row}: probabilities sum to {sum}, outside the accepted band around 1")]
    RowSum { row: usize, sum: f64 },

    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected} classes, got {got}")]
    ClassMismatch { expected: usize, got: usize },

    #[error("assignment contains uncoded rows; filter them before computing distributional metrics")]
    UncodedPresent,

    #[error("invalid reference distribution: {0}")]
    InvalidReference(String),

    #[error("invalid tie order: {0}")]
    InvalidTieOrder(String),

    #[error("target counts sum to {got}, expected {expected}")]
    InfeasibleCounts { expected: usize, got: usize },

    #[error("no reference distribution for group {0:?}")]
    MissingGroupReference(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
