use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("no dual family declared for `{0}`")]
    MissingDual(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("missing component for `{0}`")]
    MissingComponent(String),
    #[error("family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("role mismatch: {0}")]
    RoleMismatch(String),
    #[error("jet order {0} not supported (first-order Lagrangians only)")]
    UnsupportedOrder(usize),
    #[error("not a symmetry: Lie derivative differs from the divergence of sigma")]
    NotASymmetry,
    #[error("antisymmetry violated: {0}")]
    Antisymmetry(String),
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
    #[error("malformed JSON: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
