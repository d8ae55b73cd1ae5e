use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("toxicity must be nonnegative, got {0}")]
    NegativeToxicity(f64),

    #[error("singular critical manifold: f(s) + g(s) = {sum:e} at s = {s} (floor {floor:e})")]
    SingularManifold { s: f64, sum: f64, floor: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },

    #[error("stiff failure at t = {t}: step still rejected after {halvings} halvings")]
    StiffFailure { t: f64, halvings: u32 },

    #[error("trajectories are not comparable: {0}")]
    Incompatible(String),

    #[error("invalid input to rate fit: {0}")]
    RateFit(String),
}
