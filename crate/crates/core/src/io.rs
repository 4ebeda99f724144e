//! File formats.
//!
//! Chain files are JSON, 0-based indices throughout:
//!
//! ```text
//! { "states": N, "edges": [[u, v, w], ...] }
//! { "states": N, "matrix": [[...], ...], "stationary": [...]? }
//! ```
//!
//! The matrix is row-major with *columns* stochastic: entry `[i][j]` is
//! the probability of moving from state `j` to state `i`.
//!
//! Function files are either a JSON array of N numbers or plain text with
//! one value per line.

use crate::chain::ChainSpec;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot parse chain file: {0}")]
    ChainFormat(String),
    #[error("cannot parse value list: {0}")]
    ValueFormat(String),
}

/// Parse a chain specification from JSON text.
pub fn parse_chain_spec(text: &str) -> Result<ChainSpec, FileError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FileError::ChainFormat(e.to_string()))?;
    let object = value
        .as_object()
        .ok_or_else(|| FileError::ChainFormat("top level must be an object".into()))?;
    if object.contains_key("edges") && object.contains_key("matrix") {
        return Err(FileError::ChainFormat(
            "give either \"edges\" or \"matrix\", not both".into(),
        ));
    }
    if !object.contains_key("edges") && !object.contains_key("matrix") {
        return Err(FileError::ChainFormat(
            "need an \"edges\" or \"matrix\" field".into(),
        ));
    }
    serde_json::from_value(value).map_err(|e| FileError::ChainFormat(e.to_string()))
}

/// Parse a list of numbers: a JSON array, or one value per line (blank
/// lines and `#` comments ignored).
pub fn parse_value_list(text: &str) -> Result<Vec<f64>, FileError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(text).map_err(|e| FileError::ValueFormat(e.to_string()));
    }
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let cell = line.trim();
        if cell.is_empty() || cell.starts_with('#') {
            continue;
        }
        let parsed: f64 = cell.parse().map_err(|_| {
            FileError::ValueFormat(format!("line {}: not a number: {cell:?}", line_no + 1))
        })?;
        values.push(parsed);
    }
    if values.is_empty() {
        return Err(FileError::ValueFormat("no values found".into()));
    }
    Ok(values)
}
