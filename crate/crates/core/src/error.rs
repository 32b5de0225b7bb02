use thiserror::Error;

use crate::instance::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid rational {input:?}: {reason}")]
    ParseRational { input: String, reason: &'static str },

    #[error("lottery violates {} constraint(s); first: {}", .0.len(), .0[0])]
    InvalidLottery(Vec<Violation>),

    #[error("envy graph has a cycle through agents {0:?}")]
    Cyclic(Vec<usize>),

    #[error("n = {n} exceeds the profile enumeration cap of {cap}; use the fixpoint method")]
    CapExceeded { n: usize, cap: usize },

    #[error("malformed X3C instance: {0}")]
    MalformedX3c(String),

    #[error("element {0} appears in no triple")]
    OrphanElement(usize),

    #[error("not an exact cover: {0}")]
    InvalidCover(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
