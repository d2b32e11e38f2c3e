//! Error types shared across the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the pipeline.
///
/// Variants are grouped so a caller can map them onto coarse exit codes:
/// [`Error::is_config`] covers configuration and usage problems, everything
/// else is a data or processing failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed price row: {msg}")]
    PriceRow { path: String, line: u64, msg: String },

    #[error("duplicate price bar for stock {stock} on {date}")]
    DuplicateDate { stock: String, date: String },

    #[error("price series for stock {stock} has {len} bar(s); need at least 2")]
    ShortSeries { stock: String, len: usize },

    #[error("{path}:{line}: malformed news line: {msg}")]
    NewsLine { path: String, line: u64, msg: String },

    #[error("document corpus is empty")]
    EmptyCorpus,

    #[error("vocabulary is empty after applying min_df = {min_df}")]
    EmptyVocab { min_df: u32 },

    #[error("seed token {token:?} is not in the filtered vocabulary (df < min_df or absent)")]
    SeedNotInVocab { token: String },

    #[error("seed sets are invalid: {msg}")]
    BadSeeds { msg: String },

    #[error("token {token:?} is not in the vocabulary")]
    UnknownToken { token: String },

    #[error("cannot select standard sets: 2K = {two_k} exceeds vocabulary size {vocab}")]
    StandardSetTooLarge { two_k: usize, vocab: usize },

    #[error("lexicon file {path} is malformed: {msg}")]
    LexiconFormat { path: String, msg: String },

    #[error("non-positive close price {price} at index {index}")]
    NonPositivePrice { index: usize, price: f64 },

    #[error("series too short: {msg}")]
    TooShort { msg: String },

    #[error("shape mismatch: {msg}")]
    ShapeMismatch { msg: String },

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("checkpoint {path} is invalid: {msg}")]
    Checkpoint { path: String, msg: String },

    #[error("feature width mismatch: model expects {expected}, sample has {got}")]
    FeatureWidth { expected: usize, got: usize },

    #[error("no training samples")]
    NoSamples,

    #[error("split leaves an empty side: {msg}")]
    BadSplit { msg: String },

    #[error("prediction/label length mismatch: {predictions} vs {labels}")]
    LengthMismatch { predictions: usize, labels: usize },

    #[error("configuration error: {msg}")]
    Config { msg: String },

    #[error("all {n} configured stock(s) failed; see report for per-stock errors")]
    AllStocksFailed { n: usize },
}

impl Error {
    /// Construct an i/o error tagged with the offending path.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Construct a configuration error.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config { msg: msg.into() }
    }

    /// True for usage/configuration problems (as opposed to data errors).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
