//! Error type shared across the crate.

/// Errors surfaced by configuration handling, experiment setup, and fitting.
///
/// Numerical kernels treat contract violations (out-of-range mode index,
/// negative time, odd norm exponent) as programmer errors and panic instead;
/// each method documents its preconditions.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Rejected configuration: bad value, bad combination, or unparseable text.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Underlying file or stream failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Order regression could not be performed on the given table.
    #[error("order fit: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
