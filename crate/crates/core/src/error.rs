use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vector norm {norm:e} is too small to normalize")]
    ZeroVector { norm: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point list is empty")]
    EmptyPointList,
    #[error("neighbours of the dropped point are orthogonal (P2 = {p2:e})")]
    OrthogonalNeighbors { p2: f64 },
    #[error("degenerate triangle: |P3| = {modulus:e}")]
    DegenerateTriangle { modulus: f64 },
    #[error("consecutive loop points {index} and {next} are orthogonal")]
    OrthogonalConsecutive { index: usize, next: usize },
    #[error("reference point is orthogonal to loop point {index}")]
    OrthogonalReference { index: usize },
    #[error("points are nearly orthogonal (P2 = {p2:e}); connection is singular")]
    NearOrthogonal { p2: f64 },
    #[error("integration path hits a singularity at s = {s}")]
    PathSingularity { s: f64 },
    #[error("stencil noise {noise:e} exceeds requested tolerance {tol:e}")]
    StepTooSmall { noise: f64, tol: f64 },
    #[error("polynomial fit is ill conditioned (condition estimate {cond:e})")]
    IllConditionedFit { cond: f64 },
    #[error("expansion order {order} is not supported")]
    UnsupportedOrder { order: usize },
    #[error("antipodal pair: geodesic is not unique")]
    AntipodalPair,
    #[error("endpoints lie in disconnected parts of the sampled region")]
    DisconnectedRegion,
    #[error("curve velocity vanishes at t = {t}")]
    StationaryPoint { t: f64 },
    #[error("sin 2θ vanishes at t = {t}")]
    SingularLatitude { t: f64 },
    #[error("|θ'| reached 1 at t = {t}")]
    SpeedSaturation { t: f64 },
    #[error("no anchor point is non-orthogonal to every other point")]
    OrthogonalAnchor,
    #[error("invariants violate the cocycle condition (residual {residual:e})")]
    InconsistentInvariants { residual: f64 },
    #[error("Gram matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("grid is not periodic along axis {axis} (mismatch {mismatch:e})")]
    PeriodicityViolation { axis: usize, mismatch: f64 },
    #[error("grid state {index} is not normalized (norm {norm})")]
    NormalizationViolation { index: usize, norm: f64 },
    #[error("family does not declare periods")]
    NonPeriodicGrid,
    #[error("overlap collapsed to {modulus:e}; branch of log is ambiguous")]
    OverlapCollapse { modulus: f64 },
    #[error("band structure is not flat: eigenvalue deviation {deviation:e}")]
    BandStructureViolation { deviation: f64 },
    #[error("coordinates sit on a chart pole")]
    PoleCoordinates,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
