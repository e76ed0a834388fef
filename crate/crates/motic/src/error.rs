use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("associativity fails on ({0}, {1}, {2})")]
    Associativity(String, String, String),
    #[error("commutativity fails on ({0}, {1})")]
    Commutativity(String, String),
    #[error("unit law fails on {0}")]
    UnitLaw(String),
    #[error("degenerate pairing in codimension {0}")]
    DegeneratePairing(usize),
    #[error("algebra mismatch")]
    AlgebraMismatch,
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("profile error at {key}: {msg}")]
    Profile { key: String, msg: String },
    #[error("resource bound exceeded: {0}")]
    Resource(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn profile(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Profile { key: key.into(), msg: msg.into() }
    }

    /// Exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 4,
            Error::Verification(_) => 2,
            _ => 3,
        }
    }
}
