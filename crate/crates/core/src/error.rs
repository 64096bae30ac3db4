use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("problem must have n >= 1 and m >= 1 (got n={n}, m={m})")]
    EmptyProblem { n: usize, m: usize },
    #[error("non-finite entry in {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },
    #[error("P is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("P is indefinite: eigenvalue {index} is {value:e}")]
    IndefiniteP { index: usize, value: f64 },
    #[error("bound inversion at index {index}: l > u")]
    BoundInversion { index: usize },
    #[error("invalid bound at index {index}: l = +inf or u = -inf")]
    InvalidBound { index: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("singular linear system (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("CG breakdown at iteration {iteration}: non-positive curvature {curvature:e}")]
    CgBreakdown { iteration: usize, curvature: f64 },
    #[error("inner solve stalled at relative residual {residual:e} after {iterations} iterations")]
    InnerStall { residual: f64, iterations: usize },
    #[error("stale direction cache: quadratic form of direction {direction} is {value:e}")]
    StaleCache { direction: usize, value: f64 },

    #[error("active-set oracle limited to m <= {limit} constraints (got {m})")]
    OracleTooLarge { m: usize, limit: usize },
    #[error("active-set oracle found no feasible candidate")]
    NoFeasibleCandidate,

    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("backend requires a direction cache and augmentation matrix")]
    MissingOffline,
    #[error("direction cache fingerprint {found} does not match problem fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },
}

pub type Result<T> = std::result::Result<T, Error>;
