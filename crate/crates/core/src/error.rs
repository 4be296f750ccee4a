use thiserror::Error;

/// Errors raised by the library. Numerical terminations that are part of
/// normal operation (an orbit reaching a phase-space boundary, a flow hitting
/// a curvature floor) are reported through result types, not through this enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("curvature vanishes at vertex {index} (kappa = {kappa:e})")]
    SingularCurvature { index: usize, kappa: f64 },

    #[error("threshold search failed: bracket [{lo}, {hi}] gives labels {lo_label} / {hi_label}")]
    SearchFailure {
        lo: f64,
        hi: f64,
        lo_label: String,
        hi_label: String,
    },

    #[error("flow terminated early at t = {t}: {cause}")]
    FlowTerminated { t: f64, cause: String },

    #[error("orbit could not be classified: {0}")]
    Undetermined(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
