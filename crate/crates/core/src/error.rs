use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("polynomial has degree 0 after stripping negligible leading coefficients")]
    ConstantPolynomial,

    #[error(
        "root finder did not converge after {iterations} iterations \
         (worst backward error {backward_error:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        backward_error: f64,
        best: Vec<Complex64>,
    },

    #[error("repeated interpolation abscissa {0}")]
    RepeatedAbscissa(Complex64),

    #[error("interpolation of degree {degree} needs at least {needed} samples, got {got}")]
    TooFewSamples {
        degree: usize,
        needed: usize,
        got: usize,
    },

    #[error("samples inconsistent with degree {degree} (relative residual {residual:.3e})")]
    InconsistentSamples { degree: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coincident evaluation points; use bracket_r_form")]
    CoincidentPoints,

    #[error("operation requires a constant b in the pencil")]
    NonConstantB,

    #[error("c0 is not a zero of the pencil polynomial (|a(c0)| = {0:.3e})")]
    NotPencilZero(f64),

    #[error("casimir check requires b = 0")]
    NonZeroB,

    #[error("degenerate section choice")]
    DegenerateSection,

    #[error("no admissible auxiliary vector")]
    NoAuxiliaryVector,

    #[error("repeated divisor coordinate near lambda = {0}")]
    RepeatedDivisorPoint(Complex64),

    #[error("divisor collision; reduce h or perturb phi")]
    DivisorCollision,

    #[error("second structure degenerate at point {0}")]
    DegenerateStructure(usize),

    #[error("same eigenvalue; the pairing needs distinct eigenvalues")]
    SameEigenvalue,

    #[error("path too close to branch point; perturb path (near lambda = {0})")]
    BranchCollision(Complex64),

    #[error("pencil polynomial vanishes on the integration path (near lambda = {0})")]
    PencilZeroOnPath(Complex64),

    #[error("no admissible path from the base point reaches the divisor point at lambda = {0}")]
    SheetMismatch(Complex64),

    #[error("repeated potential coefficient alpha = {0}")]
    RepeatedAlpha(f64),

    #[error("state violates constraint: {0}")]
    ConstraintViolation(String),

    #[error("integration aborted at t = {time}: {reason}")]
    IntegrationAborted { time: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
