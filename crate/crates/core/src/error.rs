use thiserror::Error;

/// Errors raised by the estimators, set operations and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("ball does not fit inside the box: margin {margin:.6} < required {required:.6}")]
    BallOutsideBox { margin: f64, required: f64 },

    #[error("set leaves the box ({cells} occupied cells would fall outside)")]
    OutsideBox { cells: usize },

    #[error("volume mismatch: expected {expected:.6}, found {found:.6}")]
    VolumeMismatch { expected: f64, found: f64 },

    #[error("empty set")]
    EmptySet,

    #[error("alpha must lie in (0,1), got {0}")]
    InvalidAlpha(f64),

    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential is not radial and nondecreasing")]
    NonMonotonePotential,

    #[error("potential is not a homogeneous radial power")]
    NotHomogeneous,

    #[error("point count mismatch: {src} source vs {dst} target")]
    CountMismatch { src: usize, dst: usize },

    #[error("too many points: {0} (limit 512)")]
    TooManyPoints(usize),

    #[error("difference regions are degenerate: |E\\B| = {outer:.6}, |B\\E| = {inner:.6}")]
    DegenerateRegions { outer: f64, inner: f64 },

    #[error("sign change not bracketed in [{lo:e}, {hi:e}]")]
    Unbracketed { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
