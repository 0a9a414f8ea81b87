use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unitary (deviation {deviation:.3e} exceeds {tolerance:.1e})")]
    NonUnitary { deviation: f64, tolerance: f64 },
    #[error("induced boundary matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix M(I+U)+N(I-U) is singular (condition number {condition:.3e})")]
    SingularMap { condition: f64 },
    #[error("matrix is not in SU(2): {0}")]
    NotSpecialUnitary(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("root scan exhausted: found {found} of {requested} levels below k*l = {cap:.3}")]
    ScanExhausted {
        found: usize,
        requested: usize,
        cap: f64,
    },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("null-space dimension {found} does not match multiplicity {expected} at k = {wavenumber}")]
    RankMismatch {
        expected: usize,
        found: usize,
        wavenumber: f64,
    },
    #[error("boundary condition is not one of the supersymmetric cases U = +-sigma_1")]
    NotSusyCase,
    #[error("spectrum classification is ambiguous: {0}")]
    Ambiguous(String),
    #[error("inconsistent spectrum data: {0}")]
    Inconsistent(String),
    #[error("all roots have sin(kl) ~ 0, cannot determine cot(xi)")]
    DegenerateTail,
    #[error("asymptotic tail too noisy: extrapolation residual {residual:.3e} exceeds {tolerance:.1e}")]
    NoisyTail { residual: f64, tolerance: f64 },
    #[error("division guard triggered: {0}")]
    DivisionGuard(String),
    #[error("least-squares fit did not converge: best residual {residual:.3e}")]
    NoConvergence { residual: f64 },
    #[error("scale-invariant kernel coefficients are singular (denominator {denominator:.3e})")]
    SingularCoefficients { denominator: f64 },
    #[error("real-time image sum needs an explicit truncation n_max")]
    NonConvergent,
    #[error("unsupported boundary condition: {0}")]
    Unsupported(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
