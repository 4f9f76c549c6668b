use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: i128 },

    #[error("unsupported dimension {0}; only 2 and 3 are supported")]
    UnsupportedDimension(usize),

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("characteristic polynomial does not have distinct real roots")]
    ComplexSpectrum,

    #[error("no eigenvalue of modulus greater than one")]
    NoUnstableDirection,

    #[error("{0} eigenvalues of modulus greater than one; only one-dimensional unstable bundles are supported")]
    MultipleUnstable(usize),

    #[error("cover could not be built: {0}")]
    Infeasible(String),

    #[error("point lies within 1e-9 of a partition hyperplane; resample")]
    DegeneratePlaque,

    #[error("trend of the outer measure is indeterminate at lambda = {lambda:.4}")]
    IndeterminateTrend { lambda: f64 },

    #[error("not enough cover levels for a critical-exponent fit: have {have}, need {need}")]
    InsufficientLevels { have: usize, need: usize },

    #[error("period of orbit exceeds {0} iterations")]
    PeriodTooLong(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("config error at line {line}, column {column}: {message}")]
    Config { line: usize, column: usize, message: String },
}
