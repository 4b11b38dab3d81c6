use std::fmt;

use thiserror::Error;

/// Source position inside a symbol expression (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Position, msg: String },

    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: Position, name: String },

    #[error("function `{name}` at {pos} takes {expected} argument(s), got {got}")]
    Arity {
        pos: Position,
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("symbol evaluation failed at x={x:?}, nu={nu:?}: {msg}")]
    Evaluation { x: Vec<f64>, nu: Vec<usize>, msg: String },

    #[error("symbol file: {0}")]
    SymbolFile(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from bad input rather than a numerical breakdown.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Evaluation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
