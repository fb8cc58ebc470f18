//! Experiment engine behind the `noisy-stm` binary: config-file driven runs,
//! parameter sweeps, the relative-noise threshold search, budget tables, and
//! an invariant verifier. All numeric output is CSV with a fixed schema and
//! 17 significant digits, deterministic down to the byte for a given master
//! seed — also when repetitions run in parallel, because every repetition
//! derives its own seed and results are assembled in index order.

pub mod config;
pub mod csv;
pub mod experiment;
pub mod threshold;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] noisy_stm_core::Error),

    #[error("config file: {0}")]
    ConfigFile(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A verification or qualitative check failed (CLI exit code 1).
    #[error("check failed: {0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// CLI exit code: checks that ran and failed exit 1, everything that
    /// prevented a run from happening (bad config, I/O) exits 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::CheckFailed(_) => 1,
            _ => 2,
        }
    }
}
