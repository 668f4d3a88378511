use thiserror::Error;

use crate::lattice::LatticePoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("source {0} lies outside the region")]
    SourceOutsideRegion(LatticePoint),
    #[error("point {0} lies outside the region")]
    PointOutsideRegion(LatticePoint),
    #[error("region is empty")]
    EmptyRegion,
    #[error("duplicate source {0}")]
    DuplicateSource(LatticePoint),
    #[error("no lattice cell of the region meets the target")]
    EmptyTarget,
    #[error("{0} is unreachable inside the region")]
    Unreachable(LatticePoint),
    #[error("{clipped} of {total} runs were clipped by the region boundary; raise the margin")]
    ClippedRuns { clipped: usize, total: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("point is not on the shape boundary (norm {norm})")]
    NotOnBoundary { norm: f64 },
    #[error("shape supports only {available} distinct tangent directions, {requested} requested")]
    InsufficientSides { requested: usize, available: usize },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("seeds {0} and {1} round to the same lattice point")]
    SeedCollision(usize, usize),
    #[error("radius {rho} does not fit inside the region")]
    RadiusExceedsRegion { rho: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

impl Error {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) | Error::InvalidArgument(_) => 2,
            Error::ClippedRuns { .. } => 3,
            Error::IoFailure(_) => 4,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
