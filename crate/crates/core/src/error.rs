use thiserror::Error;

/// Errors raised by loss evaluation, training, oracles and generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scores: {0}")]
    InvalidScores(String),
    #[error("label {label} out of range for {n} classes")]
    LabelOutOfRange { label: usize, n: usize },
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid costs: {0}")]
    InvalidCosts(String),
    #[error("invalid psi: q = {0} is outside [0, 1]")]
    InvalidPsi(f64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("unsupported loss: {0}")]
    UnsupportedLoss(String),
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("assumption Σ c ≥ n_e − 2 fails at point {point}, label {label}, expert {expert}")]
    PremiseViolated { point: usize, label: usize, expert: usize },
    #[error("zero margin at point {0}")]
    ZeroMargin(usize),
    #[error("invalid exponent: s = {0} must be at least 1")]
    InvalidExponent(f64),
    #[error("constraint unsatisfiable after {0} resamples")]
    Unsatisfiable(usize),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
