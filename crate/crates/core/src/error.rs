use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid realization: {0}")]
    InvalidRealization(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),
    #[error("unsupported matroid: {0}")]
    UnsupportedMatroid(String),
    #[error("objective must be {expected}")]
    WrongObjective { expected: &'static str },
    #[error("enumeration of {required} states exceeds the cap of {cap}; {hint}")]
    EnumerationTooLarge {
        required: u64,
        cap: u64,
        hint: &'static str,
    },
    #[error("linear program: {0}")]
    Lp(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Product of `sizes`, saturating at `u64::MAX`.
pub(crate) fn saturating_product(sizes: impl IntoIterator<Item = u64>) -> u64 {
    sizes.into_iter().fold(1u64, |acc, s| acc.saturating_mul(s))
}

pub(crate) fn check_cap(required: u64, cap: u64, hint: &'static str) -> Result<()> {
    if required > cap {
        Err(Error::EnumerationTooLarge {
            required,
            cap,
            hint,
        })
    } else {
        Ok(())
    }
}
