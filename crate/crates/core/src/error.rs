use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("validation failed ({invariant}): {detail}")]
    Validation { invariant: String, detail: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("missing seed invariant {0}")]
    SeedGap(String),
    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient order: {0}")]
    InsufficientOrder(String),
    #[error("no certified split: {0}")]
    NoCertifiedSplit(String),
    #[error("grading violation: {0}")]
    Grading(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn validation(invariant: &str, detail: impl Into<String>) -> Self {
        Error::Validation { invariant: invariant.to_string(), detail: detail.into() }
    }

    /// True for errors caused by bad input data rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Validation { .. }
                | Error::SeedGap(_)
                | Error::UnsupportedTarget(_)
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
