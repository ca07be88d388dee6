use crate::expfam::Face;
use thiserror::Error;

/// Errors raised by construction and the risk/projection operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample space has no points")]
    EmptySpace,

    #[error("sample space labels are not distinct: {0:?} appears twice")]
    DuplicateLabel(String),

    #[error("operands live on different sample spaces")]
    SpaceMismatch,

    #[error("masses sum to {sum:.17e}, outside the 1e-12 normalization tolerance")]
    NotNormalized { sum: f64 },

    #[error("invalid log-mass at point {index}: {value}")]
    InvalidLogMass { index: usize, value: f64 },

    #[error("expected {expected} per-point values, got {got}")]
    StatisticLength { expected: usize, got: usize },

    #[error("statistic value at point {index} is not finite")]
    NonFiniteStatistic { index: usize },

    #[error("mixture weights sum to {sum:.17e}, not 1 within 1e-12")]
    InvalidWeights { sum: f64 },

    #[error(
        "product space has {size} outcomes, above the enumeration cap {cap}; \
         route the computation through sufficient-statistic level sets"
    )]
    EnumerationCap { size: u128, cap: usize },

    #[error("level set {description} has zero probability under the generator")]
    NullLevelSet { description: String },

    #[error("base point must have full support; point {index} has zero mass")]
    NotFullSupport { index: usize },

    #[error(
        "canonical statistic is not minimal: its coordinates together with the \
         constant are affinely dependent on the sample space"
    )]
    NotMinimal,

    #[error("statistic dimension {dim} exceeds |X| - 1 = {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("convex-hull geometry is only implemented for d <= 2 (got d = {dim})")]
    UnsupportedDimension { dim: usize },

    #[error("mean parameter lies on the boundary of the mean space; use the extended projection")]
    BoundaryMean { face: Face },

    #[error("mean parameter {mu:?} lies outside the closed convex hull of the statistic")]
    OutsideHull { mu: Vec<f64> },

    #[error("moment-matching solver did not converge; final residual {residual:.3e}")]
    NoConvergence { residual: f64 },

    #[error("divergence is infinite; the correction term is undefined")]
    InfiniteDivergence,

    #[error("estimator assigns {got} values, domain has {expected} outcomes")]
    EstimatorLength { expected: usize, got: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
