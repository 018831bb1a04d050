use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("square root has a branch point at the origin (b = 0)")]
    BranchPointAtOrigin,

    #[error("Taylor order {requested} exceeds the configured cap {cap}")]
    OrderOverflow { requested: usize, cap: usize },

    #[error("derivative order {requested} exceeds the precomputed table (order {available})")]
    DerivativeOrderExceeded { requested: usize, available: usize },

    #[error("M(0) is numerically singular (rcond estimate {rcond:.3e}); consider shift_scale to move the expansion point")]
    SingularM0 { rcond: f64 },

    #[error("projected M(0) is numerically singular (rcond estimate {rcond:.3e})")]
    SingularProjectedM0 { rcond: f64 },

    #[error("indefinite scalar product broke down at iteration {iteration} (omega = {omega:.3e}); try a different starting vector")]
    BreakdownOmega { iteration: usize, omega: f64 },

    #[error("non-finite values at iteration {iteration}; the problem is badly scaled, consider shift_scale")]
    NonFiniteIterate { iteration: usize },

    #[error("strategy `{strategy}` does not match the problem structure: {reason}")]
    StrategyMismatch { strategy: String, reason: String },

    #[error("dense truncation size {requested} exceeds the cap {cap}")]
    SizeCapExceeded { requested: usize, cap: usize },

    #[error("matrices must be square and of equal dimension: {0}")]
    DimensionMismatch(String),

    #[error("term matrix {term} is not symmetric (max asymmetry {deviation:.3e})")]
    NotSymmetric { term: usize, deviation: f64 },

    #[error("low-rank tag of term {term} fails ||A - U U^T|| <= tol ||A|| (relative residual {residual:.3e})")]
    LowRankTagInvalid { term: usize, residual: f64 },

    #[error("leading polynomial coefficient is numerically singular")]
    SingularLeadingCoefficient,

    #[error("problem is not polynomial: term {term} has a non-polynomial function")]
    NotPolynomial { term: usize },

    #[error("starting vector is zero")]
    ZeroStartingVector,

    #[error("accumulated first blocks span a zero subspace")]
    ZeroSubspace,

    #[error("indefinite product matrix Omega is singular at index {index}")]
    SingularOmega { index: usize },

    #[error("all functions vanish at lambda = {lambda}; the residual denominator is zero")]
    DegeneratePoint { lambda: num_complex::Complex64 },

    #[error("eigenvalue iteration failed to converge")]
    EigConvergence,

    #[error("matrix market parse error at {path}:{line}: {reason}")]
    MatrixMarket {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
