use thiserror::Error;

/// Errors produced by corpus handling, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("case `{id}` has no class label")]
    UnlabeledCase { id: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("feature id {feature} out of range (dictionary has {limit} features)")]
    FeatureOutOfRange { feature: usize, limit: usize },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("unknown class id {0}")]
    UnknownClassId(usize),

    #[error("test fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("ranking length must be at least 1, got {0}")]
    InvalidRank(usize),

    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("dictionary mismatch: model was trained under {expected}, input is encoded under {actual}")]
    DictionaryMismatch { expected: String, actual: String },

    #[error("malformed model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
