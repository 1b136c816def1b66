//! Experiment orchestration for the relaxed plasma / resistive MHD pair:
//! configuration, initial data, paired trajectory runs, ε-sweeps with rate
//! fitting, manufactured-solution verification, structural identity checks,
//! and checkpoint I/O.

pub mod background;
pub mod checkpoint;
pub mod checks;
pub mod config;
pub mod csvio;
pub mod fit;
pub mod ic;
pub mod mms;
pub mod pair;
pub mod parallel;
pub mod residual;
pub mod sweep;

pub use checks::CheckItem;
pub use config::Config;

use dll_core::SolverError;

/// Harness-level failure: configuration problems, propagated solver aborts,
/// file I/O, and container-format violations.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("file format error: {0}")]
    Format(String),
}

impl HarnessError {
    /// True when halving dt and rerunning deterministically may cure the
    /// failure (stability or monitor trips, not usage or I/O problems).
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            HarnessError::Solver(
                SolverError::CflViolation { .. }
                    | SolverError::Positivity { .. }
                    | SolverError::NonFinite { .. }
            )
        )
    }
}
