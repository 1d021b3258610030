use thiserror::Error;

/// Errors for state-space, grid, and tensor computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),

    #[error("ray outside chart {0}: component magnitude {1:.3e}")]
    RayOutsideChart(usize, f64),

    #[error("chart index {0} out of range 1..={1}")]
    ChartIndexOutOfRange(usize, usize),

    #[error("matrix is not Hermitian (deviation {0:.3e} exceeds {1:.3e})")]
    NotHermitian(f64, f64),

    #[error("zero vector where a state was required")]
    ZeroVector,

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("tangent vectors have different base points")]
    BasePointMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("probability entry {0} is not positive ({1})")]
    NonPositiveProbability(usize, f64),

    #[error("perturbation does not sum to zero (sum {0:.3e})")]
    UnbalancedPerturbation(f64),

    #[error("grid geometry mismatch: {0}")]
    GridMismatch(String),

    #[error("operation requires {expected} boundary, grid has {found}")]
    BoundaryPolicy {
        expected: &'static str,
        found: &'static str,
    },

    #[error("shift {0:.3e} is not grid aligned (nearest step {1})")]
    ShiftNotGridAligned(f64, f64),

    #[error("shift too large for decay-boundary grid: {0}")]
    ShiftTooLarge(String),

    #[error("grid is degenerate: {0}")]
    DegenerateGrid(String),

    #[error("metric is not positive definite at node {0} (min eigenvalue {1:.3e})")]
    MetricNotPositive(usize, f64),

    #[error("inverse metric is not positive semi-definite (min eigenvalue {0:.3e})")]
    MetricNotPsd(f64),

    #[error("Weyl gauge from density requires n >= 3 (got {0})")]
    GaugeDimension(usize),

    #[error("operation requires a constant (Riemann-flat) metric")]
    NonFlatMetric,

    #[error("phase unwrap failed: {0} nodes unreachable above the mask threshold")]
    UnwrapFailed(usize),

    #[error("time derivatives missing: {0}")]
    MissingTimeDerivative(&'static str),

    #[error("evolution unstable or misconfigured: {0}")]
    UnstableEvolution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
