use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice size {0}: the torus needs L >= 2")]
    InvalidSize(usize),
    #[error("degenerate path: both endpoints are {0}")]
    DegeneratePath(usize),
    #[error("configuration sizes differ: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("exact oracle limited to L <= 3, got L = {0}")]
    OracleTooLarge(usize),
    #[error("term {term} has a {axis} factor, which leaves the {sector} sector")]
    AxisMismatch {
        term: usize,
        axis: char,
        sector: &'static str,
    },
    #[error("unsupported sector: {0}")]
    UnsupportedSector(String),
    #[error("invalid perturbation term: {0}")]
    InvalidTerm(String),
    #[error("invalid disorder field: {0}")]
    InvalidDisorder(String),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configuration {0:?} is not in the basis")]
    UnknownConfiguration(Vec<usize>),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fiber box radius {radius} too small, need at least {required}")]
    BoxTooSmall { radius: usize, required: usize },
    #[error("syndrome has odd cardinality ({0})")]
    InvalidSyndrome(usize),
    #[error("error and correction do not close: {0} residual defects")]
    InconsistentCorrection(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("chemical potential search failed: {0}")]
    TuningFailed(String),
    #[error("curves do not cross")]
    NoCrossing,
    #[error("curves cross {} times: {crossings:?}", crossings.len())]
    AmbiguousCrossing { crossings: Vec<f64> },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
