use thiserror::Error;

use crate::parser::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("symbol `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("name clash: `{0}` is already declared")]
    NameClash(String),

    #[error("chain mismatch: {0}")]
    ChainMismatch(String),

    #[error("variable `{0}` is not assigned")]
    UnassignedVariable(String),

    #[error("formula is not a sentence: free variables {0:?}")]
    OpenFormula(Vec<String>),

    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),

    #[error("search budget exceeded: {needed} candidates > budget {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Fails with [`Error::Budget`] when `needed` exceeds `budget`.
pub(crate) fn check_budget(needed: u128, budget: u64) -> Result<()> {
    if needed > budget as u128 {
        Err(Error::Budget { needed, budget })
    } else {
        Ok(())
    }
}
