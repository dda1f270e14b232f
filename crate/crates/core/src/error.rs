use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// `|tau|^2 = v^2 + w^2` fell to or below the regularity threshold.
    #[error("curve is not regular at beta = {beta}: v^2 + w^2 = {speed_sq:e}")]
    RegularityViolation { beta: f64, speed_sq: f64 },

    #[error("winding number cross-check failed: structural k = {structural}, quadrature = {quadrature}")]
    CrossCheckMismatch { structural: i64, quadrature: f64 },

    #[error("curve must be parametrized counterclockwise (signed area = {signed_area:e})")]
    OrientationError { signed_area: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("budget exhausted after {evaluations} evaluations: {reason}")]
    BudgetExhausted { evaluations: usize, reason: String },

    #[error("invalid curve specification: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::DomainError(msg.into())
    }
}
