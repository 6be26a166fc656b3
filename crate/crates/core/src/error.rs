use thiserror::Error;

/// Errors produced by the sensitivity computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector: at least one coefficient must be nonzero")]
    ZeroVector,

    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("{what} = {value} is out of range: {expected}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("truncation at dim {max_dim} leaves tail probability {achieved:e} (tolerance {tol:e}); need dim {required}")]
    Truncation {
        max_dim: usize,
        required: usize,
        achieved: f64,
        tol: f64,
    },

    #[error("norm deficit {deficit:e} after evolution at working dim {dim}; increase the padding")]
    NormLoss { deficit: f64, dim: usize },

    #[error("Fisher coefficient f = {0} is positive: fidelity cannot exceed 1")]
    PositiveFisher(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("finite-difference derivative did not converge (value {value:e}, error estimate {error:e}); try another step")]
    NonConvergence { value: f64, error: f64 },

    #[error("non-finite value from statistics callback at eps = {0}")]
    NonFinite(f64),

    #[error("invalid state spec `{token}`: {message}")]
    Parse { token: String, message: String },

    #[error("grid file: {0}")]
    GridFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::OutOfRange { .. } | Error::ZeroVector | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
