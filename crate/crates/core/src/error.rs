use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("objective construction failed: {0}")]
    ObjectiveConstruction(String),

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("iteration diverged at k = {k}")]
    Divergence { k: usize },

    #[error("objective lacks a hessian-vector oracle required for beta = {beta}")]
    MissingHessian { beta: f64 },

    #[error("integration blew up at t = {t}")]
    IntegrationBlowup { t: f64 },

    #[error("requested horizon {requested} exceeds available span {available}")]
    Span { requested: f64, available: f64 },

    #[error("configuration mismatch: {0}")]
    Configuration(String),

    #[error("quadratic for beta_c has negative discriminant {0}")]
    NoRealRoot(f64),

    #[error("step-size window is empty: s_min = {s_min} > s_max = {s_max}")]
    WindowEmpty { s_min: f64, s_max: f64 },
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
