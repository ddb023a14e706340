use thiserror::Error;

use crate::model::{VertexId, Violation};

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{message} (line {line}, column {column})")]
    Document {
        message: String,
        line: usize,
        column: usize,
    },

    #[error("invalid network: {}", summarize(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("structural error at edge {edge}: {reason}")]
    Structural { edge: usize, reason: String },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
