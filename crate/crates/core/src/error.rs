use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("photon count N must be even and at least 2, got {0}")]
    InvalidPhotonCount(usize),

    #[error("node count d must be at least {min}, got {d}")]
    TooFewNodes { d: usize, min: usize },

    #[error("node count d must be even, got {0}")]
    OddNodeCount(usize),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "Fisher matrix is singular (eigenvalues span [{smallest:e}, {largest:e}]); \
         its inverse does not exist, reparametrize to drop the irrelevant direction θ₀ first"
    )]
    SingularMatrix { smallest: f64, largest: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("weight vector {alpha:?} lies in the null space of the Fisher matrix (αᵀFα = {quad:e})")]
    NullDirection { alpha: Vec<f64>, quad: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("literal Fisher sum is ill-posed: outcome probability {0:e} is below 1e-8")]
    OracleDomain(f64),

    #[error("initial guess is outside the identifiable box: pair sum x_{pair} = {value} needs |x| < {limit}")]
    GuessOutsideBox { pair: usize, value: f64, limit: f64 },

    #[error("maximum-likelihood search did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
