use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ingestion failed: {0}")]
    Ingestion(String),

    #[error("resampling failed: {0}")]
    Resample(String),

    #[error("cleaning failed: {0}")]
    Cleaning(String),

    #[error("scaler error: {0}")]
    Scaler(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("windowing error: {0}")]
    Windowing(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parameter layout mismatch")]
    LayoutMismatch,

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("correlation undefined: {0}")]
    Correlation(String),

    #[error("federation selection failed: {0}")]
    Selection(String),

    #[error("non-finite update")]
    NonFinite,

    #[error("effective noise undefined for z = {z}, sigma_b = {sigma_b}")]
    UndefinedEffectiveNoise { z: f64, sigma_b: f64 },

    #[error("accountant error: {0}")]
    Accountant(String),

    #[error("field parameter error: {0}")]
    Field(String),

    #[error("need at least {needed} shares, got {got}")]
    Threshold { needed: usize, got: usize },

    #[error("duplicate share index {0}")]
    DuplicateShare(u64),

    #[error("quantization error: {0}")]
    Quantization(String),

    #[error("secure aggregation aborted: {0}")]
    Abort(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("all clients failed in round {0}")]
    AllClientsFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(String),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Toml(e.to_string())
    }
}
