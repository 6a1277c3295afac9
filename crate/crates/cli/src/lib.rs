//! Library behind the `zrp` binary: configuration, commands, and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::Path;

pub use commands::{run_command, Command, Which};
pub use config::{ExperimentConfig, Overrides, OUT_ENV};
pub use output::{check_csv, check_dir, schema_for};

/// Errors surfaced to the shell, each with its exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(zrp_core::Error),
    Schema(String),
    Io(String),
    VerdictFailed { which: String, detail: String },
}

impl CliError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    /// 2 config or validation, 3 divergent series, 4 event budget, 5 failed verdict, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Schema(_) => 2,
            Self::Core(zrp_core::Error::Diverges { .. }) => 3,
            Self::Core(zrp_core::Error::EventBudgetExceeded { .. }) => 4,
            Self::Core(_) => 2,
            Self::VerdictFailed { .. } => 5,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Schema(m) => write!(f, "schema violation: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::VerdictFailed { which, detail } => write!(f, "{which} verdict failed: {detail}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<zrp_core::Error> for CliError {
    fn from(e: zrp_core::Error) -> Self {
        Self::Core(e)
    }
}

/// Runs `f` on a worker pool of `threads` workers (0 = available parallelism).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}
