use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("point leaves the evaluation domain (coordinate {coordinate:?})")]
    DomainViolation { coordinate: Option<usize> },

    #[error("non-finite value produced by the system map")]
    NonFinite,

    #[error("warm start is not feasible (violation {violation:e})")]
    InfeasibleWarmStart { violation: f64 },

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("t = {t} is outside the Newton map domain [0, {nu})")]
    OutOfDomain { t: f64, nu: f64 },

    #[error("derivative keeps its sign on the whole search interval")]
    NoSignChange,

    #[error("monotonicity of the radius function is violated; first crossing at {rho}")]
    H3Violated { rho: f64 },

    #[error("invalid majorant model: {0}")]
    InvalidModel(String),

    #[error("t0 = {t0} must lie in (0, {rho})")]
    T0OutOfRange { t0: f64, rho: f64 },

    #[error("sqrt(2 theta) = {lambda} must be below 1")]
    LambdaTooLarge { lambda: f64 },

    #[error("initial point rule with gamma = {gamma} leaves the box")]
    OutOfBox { gamma: f64 },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("malformed CSV: {0}")]
    Csv(String),
}
