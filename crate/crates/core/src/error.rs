use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters or inconsistent configuration. `field` names the offending input.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// A time was requested outside the stored noise window.
    #[error("time {t} is outside the stored window [{min}, {max}]")]
    OutOfRange { t: f64, min: f64, max: f64 },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The state stopped being finite during time stepping.
    #[error("non-finite state after the step starting at t = {t}")]
    Divergence { t: f64 },

    /// Iterative linear solve missed its residual target.
    #[error("linear solver did not converge: residual {residual:e} after {iterations} iterations")]
    LinearSolver { iterations: usize, residual: f64 },

    /// Fields living on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Operation called with arguments violating its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
