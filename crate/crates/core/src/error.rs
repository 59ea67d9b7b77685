use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("elements belong to different algebras")]
    AlgebraMismatch,

    #[error("invalid algebra descriptor: {0}")]
    InvalidAlgebra(String),

    #[error("matrix entry ({row}, {col}) lies outside the block structure")]
    OffBlockEntry { row: usize, col: usize },

    #[error("element is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("observable has a degenerate spectrum; supply a completing commuting family")]
    Degenerate,

    #[error("family is not commuting (commutator norm {norm:.3e})")]
    NonCommuting { norm: f64 },

    #[error("observable is not contained in context {context}")]
    IncompatibleObservable { context: usize },

    #[error("unknown context id {0}")]
    UnknownContext(usize),

    #[error("no layer for context {0}")]
    MissingLayer(usize),

    #[error("character index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("not a positive normalized functional: {0}")]
    NonPositiveFunctional(String),

    #[error("empty functional family")]
    EmptyFamily,

    #[error("frame is not orthonormal (deviation {deviation:.3e})")]
    NonOrthonormalFrame { deviation: f64 },

    #[error("malformed ray set: {0}")]
    MalformedRays(String),

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("Fock cutoff {cutoff} too small for {order} position factors (need at least {required})")]
    CutoffTooSmall {
        cutoff: usize,
        order: usize,
        required: usize,
    },

    #[error("time grid too coarse: step {step:.3e} exceeds {limit:.3e}")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("time {0} is not a grid point")]
    OffGrid(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
