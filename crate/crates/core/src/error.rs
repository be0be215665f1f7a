use thiserror::Error;

/// Failure modes shared across the numerical kernel and the geometry built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular or has non-finite entries")]
    Singular,
    #[error("spectrum is not real: eigenvalue {re} + {im}i")]
    NonRealSpectrum { re: f64, im: f64 },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("matrix is not symmetric positive definite with determinant 1: {0}")]
    NotSpd(String),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("direction is not a unit traceless vector: {0}")]
    NotUnit(String),
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(f64),
    #[error("element is not proximal (gaps {gaps:?})")]
    NotProximal { gaps: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("boundary point is not regular (signature {0:?})")]
    NotRegular(Vec<usize>),
    #[error("direction is not in the closed positive chamber")]
    NotInChamber,
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
    #[error("invalid boundary point: {0}")]
    InvalidBoundaryPoint(String),
    #[error("limit did not converge: estimate {estimate:e} above tolerance {tol:e}")]
    NoConvergence { estimate: f64, tol: f64 },
    #[error("iteration budget of {0} steps exhausted")]
    BudgetExceeded(usize),
    #[error("points are not collinear (defect {0:e})")]
    NotCollinear(f64),
    #[error("coincident points in cross ratio")]
    CoincidentPoints,
    #[error("point lies outside the convex domain")]
    OutsideDomain,
    #[error("degenerate hull: {0}")]
    DegenerateHull(String),
    #[error("point is not on the boundary (distance {0:e})")]
    NotOnBoundary(f64),
    #[error("element does not preserve the domain (offset {0:e})")]
    NotPreserving(f64),
    #[error("invalid convex body: {0}")]
    InvalidBody(String),
    #[error("ambiguous deduplication: matrices differ by {0:e}")]
    ToleranceCollision(f64),
    #[error("triangle type ({0}, {1}, {2}) is not hyperbolic")]
    NotHyperbolicType(u32, u32, u32),
    #[error("deformation parameter {0} outside the window ({1}, {2})")]
    OutsideWindow(f64, f64, f64),
    #[error("non-discrete group suspected: word {0:?} is near the identity")]
    NonDiscreteSuspected(Vec<i32>),
    #[error("no element passed the norm filter")]
    EmptyCone,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
