use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid spline space: {0}")]
    InvalidSpace(String),

    #[error("point x = {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("derivative order {0} is not supported (max 2)")]
    UnsupportedDerivative(usize),

    #[error("unsupported quadrature order {0} (supported: 1..=10)")]
    UnsupportedQuadrature(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-positive pivot {value:e} at row {row}: matrix is not positive definite")]
    NonPositivePivot { row: usize, value: f64 },

    #[error("matrix has not been factored")]
    NotFactored,

    #[error("coercivity violated: c1 = {c1:e}, c2 = {c2:e}")]
    Coercivity { c1: f64, c2: f64 },

    #[error("invalid bathymetry: {0}")]
    Bathymetry(String),

    #[error("invalid model parameters: {0}")]
    Params(String),

    #[error("water depth {depth:e} <= 0 at x = {x}, t = {t}")]
    DepthLoss { x: f64, t: f64, depth: f64 },

    #[error("vacuum state at boundary: 1 + eps*zeta = {0:e}")]
    Vacuum(f64),

    #[error("no solitary wave: {0}")]
    Solitary(String),

    #[error("newton iteration failed: {0}")]
    Newton(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("integration aborted at step {step} (t = {t}): {source}")]
    Aborted {
        step: usize,
        t: f64,
        #[source]
        source: Box<FemError>,
    },
}

impl From<std::io::Error> for FemError {
    fn from(e: std::io::Error) -> Self {
        FemError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FemError>;
