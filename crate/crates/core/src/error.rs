use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("feature layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("class `{class}` has {count} window(s); at least {required} required")]
    TooFewSamples {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("matrix is not positive definite: leading minor {minor} has pivot {pivot:e}")]
    NotPositiveDefinite { minor: usize, pivot: f64 },

    #[error("unknown terrain profile `{name}`; builtin profiles: {}", available.join(", "))]
    UnknownProfile {
        name: String,
        available: Vec<String>,
    },

    #[error("{format}: line {line}: {message}")]
    Parse {
        format: &'static str,
        line: usize,
        message: String,
    },

    #[error("{format}: unsupported version {found} (this build reads up to {supported})")]
    UnsupportedVersion {
        format: &'static str,
        found: u64,
        supported: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
