use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("unknown instance rule `{0}` (supported: uniform-simplex)")]
    UnknownRule(String),

    #[error("instance seed {seed}, beta {beta}, gamma {gamma}: {source}")]
    Solver {
        seed: u64,
        beta: f64,
        gamma: f64,
        #[source]
        source: migration_mdp::Error,
    },

    #[error("instance seed {seed}, beta {beta}, gamma {gamma}: {message}")]
    Inconsistent {
        seed: u64,
        beta: f64,
        gamma: f64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] migration_mdp::Error),
}

impl BenchError {
    /// Process exit code: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) | BenchError::UnknownRule(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
