//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MineError>;

/// Errors surfaced by the mining pipeline.
///
/// Programmer-contract violations (out-of-range indices, empty clusters,
/// `clicks > impressions` handed to a weight function) panic instead; these
/// variants cover bad inputs a caller cannot rule out statically.
#[derive(Debug, Error)]
pub enum MineError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("row {row}: {message}")]
    Validation { row: u64, message: String },

    #[error("input produced an empty graph (need at least one query and one product-type)")]
    EmptyGraph,

    #[error("data error: {0}")]
    Data(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("internal error: {0}")]
    Internal(String),
}
