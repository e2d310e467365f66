use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty operator list")]
    EmptyOperatorList,
    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid dimension {0} for factor `{1}`")]
    InvalidDimension(usize, String),
    #[error("trace drifted to {trace} (tolerance {tolerance:e}); reduce the time step")]
    TraceDrift { trace: f64, tolerance: f64 },
    #[error("state lost positivity: minimum eigenvalue {0:e}")]
    PositivityViolation(f64),
    #[error("invalid time span: t0 = {t0:e}, t1 = {t1:e}, dt = {dt:e}")]
    InvalidTimeSpan { t0: f64, t1: f64, dt: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("clock mismatch: state at {state:e} s, stage starts at {stage:e} s")]
    ClockMismatch { state: f64, stage: f64 },
    #[error("mode `{0}` is not attached")]
    DetachedMode(String),
    #[error("mode `{label}` still holds population {population:e}; pass force to discard it")]
    OccupiedMode { label: String, population: f64 },
    #[error("qudit `{0}` is not attached")]
    UnknownQudit(String),
    #[error("conditional probability undefined: P(e2) = 0")]
    ZeroDenominator,
    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("degenerate fringe fit: {0}")]
    DegenerateFit(String),
    #[error("trace is not a decay: {0}")]
    NonMonotonic(String),
    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),
    #[error("invalid expansion point: {0}")]
    InvalidResonance(String),
    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
