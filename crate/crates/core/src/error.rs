use thiserror::Error;

/// Errors raised by every layer of the checker.
#[derive(Debug, Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),

    /// A configured cap was hit. Signals a desk-scale limit, not a wrong answer.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("formula syntax error at offset {pos}: {msg}")]
    Formula { pos: usize, msg: String },

    #[error("validation failed ({check}), witness {witness}")]
    Validation { check: String, witness: String },

    #[error("unknown name: {0}")]
    Unknown(String),

    #[error("unsupported iterated announcement: {0}")]
    UnsupportedStar(String),

    #[error("learning diverged: {0}")]
    Diverged(Box<crate::disappearance::Divergence>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
