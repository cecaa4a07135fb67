use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("origin is not an interior point of the body")]
    OriginNotInterior,
    #[error("method {method} is not available in dimension {dim}")]
    MethodDimensionMismatch { method: &'static str, dim: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("center lies outside the body")]
    CenterOutsideBody,
    #[error("point lies outside the source body")]
    PointOutsideSource,
    #[error("bodies share no interior ball after centering")]
    NoCommonCore,
    #[error("invalid radii: need 0 < r < R, got r={r}, R={big_r}")]
    InvalidRadii { r: f64, big_r: f64 },
    #[error("point is interior; no active constraint")]
    InteriorPoint,
    #[error("solid angle must be positive, got {0}")]
    NonpositiveAngle(f64),
    #[error("volume must be positive, got {0}")]
    NonpositiveVolume(f64),
    #[error("volume {v} outside (0, {total})")]
    VolumeOutOfRange { v: f64, total: f64 },
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("resolution too coarse: target {target} cells of {available}")]
    ResolutionTooCoarse { target: usize, available: usize },
    #[error("exhaustive search needs at most {max} cells, grid has {cells}")]
    TooManyCells { cells: usize, max: usize },
    #[error("upper-bound witness at this volume is not a geodesic ball")]
    WitnessNotBall,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("checked assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
