use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix is not Hermitian (or otherwise malformed).
    #[error("validation failed at entry ({row}, {col}): {reason}")]
    Validation {
        row: usize,
        col: usize,
        reason: String,
    },

    /// A Cholesky pivot was not strictly positive.
    #[error("matrix is singular or indefinite (pivot {pivot} = {value:e} at index {index})")]
    SingularMatrix { index: usize, pivot: &'static str, value: f64 },

    /// An iterative search hit its iteration cap.
    #[error("{what} did not converge after {iters} iterations (bracket [{lo:e}, {hi:e}])")]
    NonConvergence {
        what: &'static str,
        iters: usize,
        lo: f64,
        hi: f64,
        /// `(eta, F(eta))` pairs evaluated so far, when the outer search failed.
        trace: Vec<(f64, f64)>,
    },

    /// The consumed power is identically zero, so energy efficiency is undefined.
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    /// Argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index out of range: {0}")]
    Index(String),

    /// Missing or malformed message in the coordination protocol.
    #[error("protocol error in round {round}: {reason}")]
    Protocol { round: usize, reason: String },

    #[error("incompatible units: cannot convert {from} to {to}")]
    Units { from: String, to: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
