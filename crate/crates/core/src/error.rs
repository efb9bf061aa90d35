use thiserror::Error;

/// A syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{name}` expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("variable `{0}` is not bound by the sort or substitution")]
    UnboundVariable(String),
    #[error("variable `{var}` is not in sort {sort}")]
    NotInSort { var: String, sort: String },
    #[error("invalid sort: {0}")]
    InvalidSort(String),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("sort mismatch: expected {expected}, found {found}")]
    SortMismatch { expected: String, found: String },
    #[error("operands live over different models")]
    ModelMismatch,
    #[error("models have different signatures")]
    SignatureMismatch,
    #[error("invalid model at {path}: {message}")]
    InvalidModel { path: String, message: String },
    #[error("{what} exceeds the configured cap ({size} > {cap})")]
    CapExceeded { what: String, size: u128, cap: u128 },
    #[error("formula `{0}` is not an equation")]
    NonEquational(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("sort families differ between knowledge bases")]
    SortFamilyMismatch,
    #[error("set is not definable (not closed under the automorphism group)")]
    NotDefinable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
