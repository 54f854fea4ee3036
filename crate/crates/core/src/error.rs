use thiserror::Error;

/// Errors produced by the tag models, the receiver pipeline and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} is outside the domain [{lo}, {hi}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The loss product R_T·|g_d| is at least one, so the small-signal
    /// oscillator has no real resonant frequency.
    #[error("no oscillation: radicand 1 - R_T*|g_d| = {radicand:.6} is not positive")]
    NoOscillation { radicand: f64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("infeasible timer design: {0}")]
    InfeasibleTimer(String),

    #[error("unreachable target: {0}")]
    Unreachable(String),

    #[error("fixture `{name}`: {reason}")]
    Fixture { name: String, reason: String },

    #[error("unknown reproduction id `{id}`; registry: {known}")]
    UnknownRepro { id: String, known: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(quantity: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain {
            quantity,
            value,
            lo,
            hi,
        }
    }
}
