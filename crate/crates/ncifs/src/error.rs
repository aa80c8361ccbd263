use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("open set condition violated at level {level}: maps {first} and {second} overlap")]
    OscViolation { level: usize, first: u64, second: u64 },
    #[error("contraction violated at level {level}, map {index}: {reason}")]
    ContractionViolation { level: usize, index: u64, reason: String },
    #[error("level {level} is not materializable: {reason}")]
    NotMaterializable { level: usize, reason: String },
    #[error("enumeration budget exceeded: {needed:.3e} words > budget {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error("level {level} diverges at t = {t}")]
    DivergentLevel { level: usize, t: f64 },
    #[error("level {level} cannot be sampled: {reason}")]
    NotSampleable { level: usize, reason: String },
    #[error("pressure sign ambiguous across the whole bracket [{lo}, {hi}]")]
    SignAmbiguous { lo: f64, hi: f64 },
    #[error("alphabet mismatch at level {level}")]
    AlphabetMismatch { level: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("hypothesis not satisfied: {0}")]
    HypothesisViolated(String),
    #[error("horizon too small: {0}")]
    HorizonTooSmall(String),
    #[error("unknown gallery system `{0}`")]
    UnknownGallery(String),
}
