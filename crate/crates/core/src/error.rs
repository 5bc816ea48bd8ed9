use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix (pivot {pivot:e} below tolerance)")]
    Singular { pivot: f64 },
    #[error("ill-conditioned matrix (condition estimate {estimate:e} exceeds cap {cap:e})")]
    IllConditioned { estimate: f64, cap: f64 },
    #[error("derivative stencil leaves the domain along axis {axis}")]
    DomainExceeded { axis: usize },
    #[error("dual-number evaluation not available for this field")]
    DualUnavailable,
    #[error("point out of range: {0}")]
    OutOfRange(String),
    #[error("conformal factor not invertible on the bracket: {0}")]
    NotInvertible(String),
    #[error("patch violation: r^2 = {r2:e} < sum of transverse squares {s2:e}")]
    PatchViolation { r2: f64, s2: f64 },
    #[error("metric is not in temporal gauge")]
    NotTemporalGauge,
    #[error("no sign change of m along the omega0 ray at {0}")]
    NoSignChange(String),
    #[error("degenerate root: normalized time derivative {rho:e} below threshold")]
    Degenerate { rho: f64 },
    #[error("refinement inconclusive: {0}")]
    InconclusiveRefinement(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("Z is not causal at sample (h(Z,Z) = {hzz:e})")]
    NonCausalZ { hzz: f64 },
    #[error("denominator vanishes ({0:e})")]
    DenominatorVanishes(f64),
    #[error("not convergent: {0}")]
    NonConvergent(String),
    #[error("branch mismatch: {0}")]
    BranchMismatch(String),
    #[error("chart invalid: {0}")]
    ChartInvalid(String),
    #[error("invalid sigma: 1 + 2 sigma = {0} must be positive")]
    InvalidSigma(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
