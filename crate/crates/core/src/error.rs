use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical engines.
///
/// Variants carry the quantity that triggered them so callers can report
/// the offending value without recomputing it.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("numerical failure: {what} (residual {residual:.3e})")]
    NumericalFailure { what: String, residual: f64 },

    #[error("singular system: estimated condition number {condition:.3e}")]
    SingularSystem { condition: f64 },

    #[error("eigenvalue {lambda} lies within {distance:.3e} of the contour")]
    ContourTooClose { lambda: Complex64, distance: f64 },

    #[error("quadrature did not produce a projector: idempotency defect {defect:.3e}")]
    QuadratureDefect { defect: f64 },

    #[error("eigenvalue {lambda} lies within {distance:.3e} of the region boundary")]
    BoundaryEigenvalue { lambda: Complex64, distance: f64 },

    #[error("operator is not hyperbolic (spectral gap {gap:.3e})")]
    NotHyperbolic { gap: f64 },

    #[error("projectors are too far apart for a similarity transport: |p - q| = {distance:.6}")]
    TooFar { distance: f64 },

    #[error("path endpoint at t = {t} is not hyperbolic (gap {gap:.3e})")]
    EndpointNotHyperbolic { t: f64, gap: f64 },

    #[error("no eigenvalue-free contour found after {depth} bisections on t in [{t0}, {t1}]")]
    SubdivisionLimit { depth: usize, t0: f64, t1: f64 },

    #[error("irregular crossing at t = {t}: slope {slope:.3e}")]
    IrregularCrossing { t: f64, slope: f64 },

    #[error("non-semisimple eigenvalue on the imaginary axis at t = {t}")]
    MultipleEigenvalueAtCrossing { t: f64 },

    #[error("path has no derivative; the crossing engine needs one (use the endpoint or partition engine)")]
    NoDerivative,

    #[error("paths do not compose: |A(1) - B(0)| = {gap:.3e}")]
    EndpointMismatch { gap: f64 },

    #[error("path is defined on the wrong domain: {0}")]
    WrongDomain(String),

    #[error("no hyperbolic tail found for |t| <= {delta_max}")]
    NoHyperbolicTail { delta_max: f64 },

    #[error("integration horizon T = {t_used} does not reach the hyperbolic tail (delta = {delta})")]
    TailNotReached { t_used: f64, delta: f64 },

    #[error("path violates the essential splitting hypothesis: {0}")]
    HypothesisViolation(String),

    #[error("argument out of range: {0}")]
    RangeError(String),

    #[error("{at}: {message}")]
    Parse { at: String, message: String },

    #[error("generation failed: {0}")]
    GenerationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
