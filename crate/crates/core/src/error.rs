use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field has no weights, scene or tables attached")]
    UninitializedField,

    #[error("direction is not unit length (norm {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate bounding box: min must be < max on every axis")]
    DegenerateAabb,

    #[error("dense decomposition size guard exceeded ({entries} entries > {limit})")]
    SizeGuardExceeded { entries: usize, limit: usize },

    #[error("sparsity must lie in [0, 1], got {0}")]
    InvalidSparsity(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("volume too small for downsampling: dims {0:?}")]
    TooSmall([usize; 3]),

    #[error("cannot build a BVH over an empty mesh")]
    EmptyMesh,

    #[error("pixel ({x}, {y}) outside {width}x{height} image")]
    OutOfImage { x: u32, y: u32, width: u32, height: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("unsupported container version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
