use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("partition series diverges at fugacity {phi}")]
    Diverges { phi: f64 },

    #[error("critical fugacity extrapolation unstable ({first} vs {second})")]
    Unstable { first: f64, second: f64 },

    #[error("{what} {requested} exceeds capacity {capacity}")]
    Capacity {
        what: &'static str,
        requested: u64,
        capacity: u64,
    },

    #[error("initial profile value {rho} exceeds the critical density {rho_c}")]
    SupercriticalProfile { rho: f64, rho_c: f64 },

    #[error("configuration is frozen (no particle can jump)")]
    Frozen,

    #[error("event budget of {budget} events exhausted at t = {t}")]
    EventBudgetExceeded { budget: u64, t: f64 },

    #[error("test function has no recession function but the singular part is non-zero")]
    MissingRecession,

    #[error("CFL safety factor {safety} outside (0, 1]")]
    CflViolation { safety: f64 },

    #[error("negative density {value} in cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("entropy is infinite (condensate with infinite critical fugacity)")]
    InfiniteEntropy,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
