//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    // --- corpus ---
    #[error("document {0:?} is empty after cleaning")]
    EmptyDocument(String),
    #[error("input contains no alphanumeric tokens")]
    NoTokens,
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),

    // --- features ---
    #[error("cannot build an IDF table from an empty corpus")]
    EmptyCorpus,
    #[error("sentence {index} does not belong to document {doc_id:?}")]
    SentenceNotInDocument { doc_id: String, index: usize },
    #[error("feature vector contains a non-finite value in dimension {0:?}")]
    NonFiniteFeature(&'static str),

    // --- scoring / summarizing ---
    #[error("scorer {0:?} requires trained model parameters")]
    MissingModel(String),
    #[error("scores cover {scored} sentences but document {doc_id:?} has {expected}")]
    ScoreCoverageMismatch {
        doc_id: String,
        scored: usize,
        expected: usize,
    },

    // --- training ---
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("training data contains only one class")]
    SingleClassData,
    #[error("too few training examples: {0}")]
    TooFewExamples(String),

    // --- evaluation ---
    #[error("reference token sequence is empty")]
    EmptyReference,
    #[error("sentence index {index} out of range for document with {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("manual review time must be positive, got {0}")]
    NonPositiveManualTime(f64),
    #[error("percent change is undefined for a zero baseline")]
    ZeroBaseline,
    #[error("dataset has no records with a reference summary or labels")]
    NoEvaluableRecords,

    // --- baseline client ---
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("malformed response from endpoint: {0}")]
    MalformedResponse(String),
    #[error("http error (status {status}) after {attempts} attempts")]
    Http { status: u16, attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),

    // --- configuration ---
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file rejected: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
