use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested functional is undefined at this input (e.g. HCT at the pure null).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Both selection rates underflowed; nothing is selected above `threshold`.
    #[error("empty selection at threshold {threshold}")]
    EmptySelection { threshold: f64 },

    #[error("FDR level {alpha} is not attained for any threshold in [{lo}, {hi}]")]
    Unattainable { alpha: f64, lo: f64, hi: f64 },

    #[error("no r in (0, 1) attains proxy error {level} at beta = {beta}")]
    OutOfRange { beta: f64, level: f64 },

    #[error("monotonicity check failed: {0}")]
    NotMonotone(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
