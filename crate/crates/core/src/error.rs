use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("DegenerateConcentric: t = 0 has no bispherical parametrization; use `oracle --concentric`")]
    DegenerateConcentric,
    #[error("Overlap: offset t = {t} must satisfy 0 < t < r2 - r1 = {gap}")]
    Overlap { t: f64, gap: f64 },
    #[error("BadRadii: need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")]
    BadRadii { r1: f64, r2: f64 },
    #[error("BadDimension: n must be >= 1, got {0}")]
    BadDimension(i64),
    #[error("PoleSingular: point lies on a bispherical pole")]
    PoleSingular,
    #[error("BadDegree: degree must be nonnegative, got {0}")]
    BadDegree(i64),
    #[error("BadLambda: Gegenbauer parameter must be positive, got {0}")]
    BadLambda(f64),
    #[error("OutOfRange: argument {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("TruncationTooSmall: truncation order {0} < 8")]
    TruncationTooSmall(usize),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("GapTooSmall: xi1 - xi2 = {0:e} below conditioning floor")]
    GapTooSmall(f64),
    #[error("OutsideAnnulus: xi = {xi} not in [{xi2}, {xi1}]")]
    OutsideAnnulus { xi: f64, xi2: f64, xi1: f64 },
    #[error("QuadratureFail: successive integrals {0} and {1} disagree")]
    QuadratureFail(f64, f64),
    #[error("NotConverged: {0}")]
    NotConverged(String),
    #[error("SingularSchur: interior block is numerically singular")]
    SingularSchur,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("I/O error at {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
