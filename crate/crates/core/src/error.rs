use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite score {score} at generation {generation}, member {member}")]
    NonFiniteScore {
        generation: u64,
        member: usize,
        score: f64,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("peer {peer} timed out at generation {generation}")]
    PeerTimeout { peer: usize, generation: u64 },

    #[error("parameter hash mismatch after generation {generation}: rank {rank} disagrees with rank {peer}")]
    ThetaMismatch {
        generation: u64,
        rank: usize,
        peer: usize,
    },

    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}
