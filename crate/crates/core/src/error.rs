use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point ({x}, {y}, {z}) is not on the unit sphere")]
    NotOnSphere { x: f64, y: f64, z: f64 },

    #[error("negative chart value {0}")]
    NegativeChartValue(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("interval [{lo}, {hi}] is outside the grid range [{min}, {max}]")]
    IntervalOutsideGrid {
        lo: f64,
        hi: f64,
        min: f64,
        max: f64,
    },

    #[error("evaluation at singular point (r, z) = ({r}, {z})")]
    SingularPoint { r: f64, z: f64 },

    #[error("point (r, z) = ({r}, {z}) lies outside the domain")]
    OutsideDomain { r: f64, z: f64 },

    #[error("flux quadrature under-resolved: raw degree {raw} (residual {residual})")]
    UnderResolved { raw: f64, residual: f64 },

    #[error("non-finite value in field at index {0}")]
    NonFinite(usize),

    #[error("inconsistent field: {0}")]
    InconsistentField(String),

    #[error("z = {0} is not a grid line of the field")]
    OffGrid(f64),

    #[error("unbalanced charges: {positives} positive vs {negatives} negative")]
    Unbalanced { positives: usize, negatives: usize },

    #[error("duplicate singularity at {0:?}")]
    DuplicatePoint([f64; 3]),

    #[error("brute-force search limited to k <= {max}, got k = {k}")]
    TooManyPoints { k: usize, max: usize },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("degenerate closed form: {0}")]
    Degenerate(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("optimizer did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed input: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
