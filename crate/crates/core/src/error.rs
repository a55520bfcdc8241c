use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `sin(Bt)` vanishes (or B = 0) so the magnetic kernel is undefined.
    #[error("singular time: B = {b}, t = {t} (sin(Bt) = 0)")]
    SingularTime { b: f64, t: f64 },

    #[error("field is not resolved: boundary mass {boundary_mass:e} exceeds {threshold:e}")]
    Unresolved { boundary_mass: f64, threshold: f64 },

    /// Two algebraically independent evaluations of the same functional disagree.
    #[error("internal consistency failure in {quantity}: {first} vs {second}")]
    InternalConsistency {
        quantity: &'static str,
        first: f64,
        second: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
