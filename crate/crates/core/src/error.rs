use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// Subdivision budget exhausted. Carries the best estimate so callers can
    /// still report it.
    #[error(
        "{layer} quadrature did not converge: value {value:e}, error estimate {err_estimate:e}"
    )]
    NonConvergence {
        layer: &'static str,
        value: f64,
        err_estimate: f64,
    },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("search did not converge: {0}")]
    SearchFailed(String),

    #[error(
        "truncation radius {radius} too small: variance bias bound {bias:e} exceeds {limit_pct}% of variance {variance:e}"
    )]
    TruncationTooSmall {
        radius: f64,
        bias: f64,
        variance: f64,
        limit_pct: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
