use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate element label `{0}`")]
    DuplicateLabel(String),

    #[error("edge references unknown element `{0}`")]
    UnknownLabel(String),

    #[error("element index {index} out of range for a ground set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("grid dimensions must be positive, got {0:?}")]
    InvalidDimensions(Vec<usize>),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("weight at index {index} is not strictly positive and finite ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("value at index {index} is not finite ({value})")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("reference function is not isotonic: g0[{lower}] = {lower_value} > g0[{upper}] = {upper_value}")]
    NotIsotonic {
        lower: usize,
        upper: usize,
        lower_value: f64,
        upper_value: f64,
    },

    #[error("truncation level {m_prime} out of range: need 1 <= m' < {levels}")]
    TruncationOutOfRange { m_prime: usize, levels: usize },

    #[error(
        "oracle projection did not converge within {max_iter} sweeps (last change {last_change:e})"
    )]
    NoConvergence { max_iter: usize, last_change: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("sample kind does not match the estimator: {0}")]
    WrongSampleKind(&'static str),

    #[error("cell {0} has no observations; the cell mean is undefined")]
    EmptyCell(usize),

    #[error("invalid mixture weights: {0}")]
    InvalidMixture(String),

    #[error(
        "covariance matrix is not positive semidefinite (pivot {pivot} has diagonal {value:e})"
    )]
    NotPositiveSemidefinite { pivot: usize, value: f64 },

    #[error("rates must be constant on each comparable level set (set {set})")]
    RatesNotConstant { set: usize },

    #[error("mass recipe retains only {retained} after side length {max_side}; not summable at tolerance {mass_tol}")]
    NotSummable {
        retained: f64,
        max_side: usize,
        mass_tol: f64,
    },

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
