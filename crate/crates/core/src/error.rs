use alloc::string::String;

/// Errors produced by the core kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    InvalidShape { width: usize, height: usize },

    #[error("RLE counts sum to {sum}, expected {expected}")]
    CountsMismatch { sum: u64, expected: u64 },

    #[error("malformed compressed RLE string: {0}")]
    MalformedRle(String),

    #[error("{width}x{height} is not divisible by resample factor {factor}")]
    IndivisibleShape { width: usize, height: usize, factor: usize },

    #[error("resample factor must be a positive power of two, got {0}")]
    InvalidFactor(usize),

    #[error("resolution mismatch: expected {expected:?}, found {found:?} (width, height)")]
    ResolutionMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("unresolved {kind} reference {id}")]
    DanglingReference { kind: &'static str, id: u64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("cannot split an empty id list")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("clip window is empty")]
    EmptyClip,

    #[error("weight shape mismatch for {name}: expected {expected}, found {found}")]
    WeightShapeMismatch { name: String, expected: String, found: String },

    #[error("non-finite activation in {0}")]
    NonFiniteActivation(&'static str),

    #[error("coordinate (t={t}, row={row}, col={col}) is outside the tracklet")]
    CoordOutOfBounds { t: usize, row: usize, col: usize },

    #[error("{expected} predictions expected, {found} given")]
    PredictionCount { expected: usize, found: usize },

    #[error("subsampled polygon has {vertices} vertices")]
    DegenerateMask { vertices: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
