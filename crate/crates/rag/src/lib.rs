//! Retrieval-augmented property generation.
//!
//! - [`knowledge`] and [`store`]: reference properties and the vector index
//!   over their code.
//! - [`embed`]: embedding providers.
//! - [`prompts`], [`provider`] and [`generation`]: prompt rendering, LLM
//!   access and the compile-and-revise loop.
//! - [`ranking`]: the weighted candidate score and its OLS fit.
//! - [`stats`]: offline harnesses over recorded runs.

pub mod embed;
pub mod generation;
pub mod knowledge;
pub mod prompts;
pub mod provider;
pub mod ranking;
pub mod stats;
pub mod store;

pub use ppgpt_core::checker::PropertyKind;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("duplicate knowledge id `{0}`")]
    DuplicateId(String),
    #[error("invalid knowledge entry `{id}`: {reason}")]
    InvalidEntry { id: String, reason: String },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding provider: {0}")]
    Embed(String),
    #[error("llm provider: {0}")]
    Provider(String),
    #[error("corrupt store file: {0}")]
    Corrupt(String),
    #[error("unsupported store format version {0}")]
    Version(u64),
    #[error("missing prompt binding `{0}`")]
    MissingPlaceholder(String),
    #[error("{0}")]
    Precondition(String),
    #[error("too few training records: {0}, need at least 4")]
    TooFewRecords(usize),
    #[error("feature matrix is rank deficient")]
    RankDeficient,
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Lowercase hex SHA-256 of `text`.
pub fn sha256_hex(text: &str) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
