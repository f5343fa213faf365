use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis of dimension {dim} exceeds the configured budget of {budget} states")]
    BudgetExceeded { dim: u128, budget: usize },

    #[error("mode index {index} out of range for a basis with {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("frequency {value} at mode {index} is not strictly positive")]
    NonPositiveFrequency { index: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("incompatible bases: {0}")]
    IncompatibleBases(String),

    #[error("eigensolver did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("shift z = {re:e}{im:+e}i lies within {distance:e} of the spectrum (guard {guard:e})")]
    NearSpectrum {
        re: f64,
        im: f64,
        distance: f64,
        guard: f64,
    },

    #[error("singular linear system at z = {re:e}{im:+e}i")]
    SingularShift { re: f64, im: f64 },

    #[error("operator does not commute with the parity operator (commutator norm {0:e})")]
    SymmetryBroken(f64),

    #[error("dense oracle refused: dimension {dim} exceeds cap {cap}")]
    OracleCap { dim: usize, cap: usize },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
