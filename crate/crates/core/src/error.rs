use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension n = {0} (expected 2, 3 or 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} is not inside the open unit ball (|x| = {norm})")]
    OutsideBall { point: Vec<f64>, norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("non-finite integrand value at abscissa {abscissa}")]
    NonFinite { abscissa: f64 },

    #[error("degenerate Jacobian at {point:?}: smallest singular value {sigma_min:e}")]
    DegenerateJacobian { point: Vec<f64>, sigma_min: f64 },

    #[error("map is not a self-map of the ball: |g({point:?})| = {norm}")]
    NotSelfMap { point: Vec<f64>, norm: f64 },

    #[error("point {point:?} lies outside the chart domain (radius {radius})")]
    OutsideChart { point: Vec<f64>, radius: f64 },

    #[error("boundary value {point:?} is off the chart graph by {offset:e}")]
    ChartMismatch { point: Vec<f64>, offset: f64 },

    #[error("no chart covers boundary point {0:?}")]
    Uncovered(Vec<f64>),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
