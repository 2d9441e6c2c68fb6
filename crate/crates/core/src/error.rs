use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("diffraction order {0} is not supported by the closed-form model (p must be 1, 2 or 3)")]
    UnsupportedOrder(i32),

    /// The momentum basis was too small for the requested accuracy.
    #[error("truncated basis did not converge at N = {n}: max population change {change:.3e} when adding two orders")]
    Truncation { n: usize, change: f64 },

    #[error("fit did not converge after {iterations} iterations (last chi2 = {chi2:.6e})")]
    NoConvergence { iterations: usize, chi2: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("infinite phase sensitivity: visibility is zero")]
    ZeroVisibility,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }
}
