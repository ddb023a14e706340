//! Text formats: the TOML network document, CSV matrices and DOT export.

pub mod document;
pub mod dot;
pub mod table;

pub use document::{emit_document, parse_document, Document};
pub use dot::{to_dot, to_dot_with_parts};
pub use table::{matrix_to_csv, parse_matrix_csv};
