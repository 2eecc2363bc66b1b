use thiserror::Error;

/// Errors raised by the library. Numerical failures carry enough context
/// (residuals, iteration counts, offending parameter) to be reported as-is.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index out of range: {what} = {value} not in [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("configuration error: {key}: {message}")]
    Config { key: String, message: String },

    #[error("pressure iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    PressureNonconvergence { iterations: usize, residual: f64 },

    #[error("CFL violation: dt*max|u|*n/L = {number:.3e} exceeds cap {cap}")]
    Cfl { number: f64, cap: f64 },

    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },

    #[error("admissibility budget exceeded: residual {residual:.3e} > {budget:.1e}; refine the grid or increase flow_steps")]
    Admissibility { residual: f64, budget: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
