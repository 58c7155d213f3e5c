//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value in {context}{}", detail_suffix(.detail))]
    NonFinite {
        context: &'static str,
        detail: String,
    },

    #[error("invalid argument for {context}: {reason}")]
    InvalidArgument {
        context: &'static str,
        reason: String,
    },

    #[error("coordinate mode mismatch: expected {expected}, got {got}; {hint}")]
    ModeMismatch {
        expected: &'static str,
        got: &'static str,
        hint: &'static str,
    },

    #[error("unknown label index {index} (vocabulary size {vocab})")]
    UnknownLabel { index: usize, vocab: usize },

    #[error("dataset format error: {0}")]
    Format(String),

    #[error("dataset version mismatch: file has {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated file: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("statistics inconsistent with records: {0}")]
    StatsInconsistent(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("numeric failure in {context} at step {step}: {reason}")]
    Numeric {
        context: &'static str,
        step: usize,
        reason: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn detail_suffix(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(" ({detail})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
