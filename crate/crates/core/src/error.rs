use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid branching law: {0}")]
    InvalidLaw(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("expected tree size {projected:.3e} exceeds node budget {budget:.3e}")]
    BudgetExceeded { projected: f64, budget: f64 },

    #[error("law fingerprint mismatch: pool built with {pool}, evolved with {law}")]
    FingerprintMismatch { pool: String, law: String },

    #[error("pool kind mismatch: expected {expected}, found {found}")]
    PoolKind { expected: String, found: String },

    #[error("invalid sample pool: {0}")]
    InvalidPool(String),

    #[error("degenerate tail: top {k} order statistics are all equal")]
    DegenerateTail { k: usize },

    #[error("no quantile grid point survived the exceedance floor of {min_exceedances}")]
    EmptyGrid { min_exceedances: usize },

    #[error("series contains a nonpositive entry at n = {n}")]
    NonPositive { n: u32 },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("infinite moment: {0}")]
    InfiniteMoment(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("pool file format: {0}")]
    PoolFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
