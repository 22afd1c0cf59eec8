use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the geometry, flow and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid or configuration record failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A height value sits at or below `r_s + margin`.
    #[error("height {value} at grid point ({i}, {j}) is not above r_s + margin = {limit}")]
    BelowMargin {
        i: usize,
        j: usize,
        value: f64,
        limit: f64,
    },

    /// Two code paths that must agree disagree beyond round-off.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// The time integrator could not take a step above the minimum step size.
    #[error("flow breakdown at t = {t}: {reason}")]
    Breakdown { t: f64, reason: String },

    /// A property the theory guarantees was violated by the numerics.
    #[error("property violation: {0}")]
    Property(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
