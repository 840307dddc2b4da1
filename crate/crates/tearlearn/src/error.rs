//! Crate-wide error type and the process exit codes derived from it.

use std::path::PathBuf;

use thiserror::Error;

/// Unified error for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument or configuration value is out of range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data (matrix, dataset, prior, file content) is malformed.
    #[error("data error: {0}")]
    Data(String),

    /// Filesystem failure while reading or writing an artifact.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A text artifact failed to parse; `line` is 1-based (0 = whole file).
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Every stream of some cycle is untearable, so no acyclic repair exists.
    /// `streams` lists the (source, target) pairs of the offending cycle.
    #[error("tearing is infeasible: cycle through streams {streams:?} contains no tearable stream")]
    InfeasibleTear { streams: Vec<(usize, usize)> },

    /// An acyclicity evaluation overflowed `f64` range.
    #[error("numerical overflow while evaluating acyclicity (largest entry magnitude {max_abs:.6e})")]
    Overflow { max_abs: f64 },

    /// A linear system was too close to singular to solve reliably.
    #[error("linear system is numerically singular (smallest singular value {sigma_min:.6e})")]
    SingularSystem { sigma_min: f64 },

    /// Training produced a non-finite quantity; the trajectory collected so
    /// far is attached for diagnosis.
    #[error("training diverged at outer step {outer}, epoch {epoch}: {quantity} became non-finite")]
    Diverged {
        outer: usize,
        epoch: usize,
        quantity: String,
        h_trajectory: Vec<(usize, f64)>,
    },

    /// An evidence-lower-bound evaluation went non-finite; the two summands
    /// are reported separately so the culprit is visible.
    #[error("loss is non-finite (kl = {kl}, reconstruction = {recon})")]
    NonFiniteLoss { kl: f64, recon: f64 },

    /// A matrix that must be positive definite failed its factorization.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A repair round could not remove any stream (typically because cycle
    /// enumeration caps hid every cycle).
    #[error("no progress: {0}")]
    NoProgress(String),

    /// An API precondition documented on the called function was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Process exit code for the command-line tool.
    ///
    /// 2 = usage error, 3 = data error, 4 = infeasible tearing problem,
    /// 5 = numerical failure. Success is 0 and is not represented here.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Data(_) | Error::Io { .. } | Error::Parse { .. } => 3,
            Error::InfeasibleTear { .. } => 4,
            Error::Overflow { .. }
            | Error::SingularSystem { .. }
            | Error::Diverged { .. }
            | Error::NonFiniteLoss { .. }
            | Error::NotPositiveDefinite(_)
            | Error::NoProgress(_)
            | Error::Precondition(_) => 5,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
