use thiserror::Error;

/// Errors produced by the risk laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid estimator: {0}")]
    InvalidEstimator(String),

    /// The estimator was specified in terms of the unknown parameter.
    #[error("estimator field `{field}` refers to the true parameter; oracle rules are not estimators")]
    OracleEstimator { field: String },

    #[error("invalid loss: {0}")]
    InvalidLoss(String),

    #[error("loss scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("loss vanishes or is non-finite on the classification window at h = {h}")]
    DegenerateLoss { h: f64 },

    #[error("quadrature needs a Gaussian error law; estimator `{0}` requires Monte Carlo")]
    QuadratureUnsupported(String),

    #[error("risk is not finite (value {value}) at theta = {theta}")]
    NonFiniteRisk { theta: f64, value: f64 },

    #[error("minimax search did not converge (step {step:e}, restart spread {spread:e})")]
    NotConverged { step: f64, spread: f64 },

    #[error("at least two losses are required, got {0}")]
    InsufficientLosses(usize),

    #[error("at least two exponent classes are required, got {0}")]
    InsufficientClasses(usize),

    #[error("losses are not in distinct power classes above one: p = {p}, q = {q}")]
    ClassPrecondition { p: f64, q: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
