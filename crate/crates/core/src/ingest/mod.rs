//! Readers for machine-readable plant descriptions.
//!
//! Two formats are accepted: PIDL, a line-oriented text format meant for
//! hand-authored or recognizer-generated P&ID content, and GraphJSON, the
//! canonical serialization written by [`crate::export::to_json`].

mod json;
mod pidl;

use std::fmt;

use crate::graph::{GraphError, ProcessGraph};

pub use json::{parse_graph_json, FORMAT_VERSION};
pub use pidl::parse_pidl;

/// A single node object in GraphJSON form.
pub(crate) fn node_from_json(value: &serde_json::Value) -> Result<crate::graph::Node, IngestError> {
    json::node_from_value(value, String::new())
}

/// A single edge object in GraphJSON form.
pub(crate) fn edge_from_json(value: &serde_json::Value) -> Result<crate::graph::Edge, IngestError> {
    json::edge_from_value(value, String::new())
}

/// A located error in a source document. `line` and `column` are 1-based;
/// columns count characters, and may point one past the end of the line
/// when something is missing there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub snippet: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.snippet.is_empty() {
            write!(f, " (at '{}')", self.snippet)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Pidl,
    GraphJson,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDoc {
    pub id: String,
    pub format: SourceFormat,
    pub content: Vec<u8>,
}

impl SourceDoc {
    pub fn pidl(id: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        Self {
            id: id.into(),
            format: SourceFormat::Pidl,
            content: content.into(),
        }
    }

    pub fn graph_json(id: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        Self {
            id: id.into(),
            format: SourceFormat::GraphJson,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("source document id is empty")]
    EmptyId,
    #[error("expected a {expected:?} document, got {found:?}")]
    WrongFormat {
        expected: SourceFormat,
        found: SourceFormat,
    },
    #[error("{}", render_all(.0))]
    Parse(Vec<ParseError>),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("invalid reference at {path}: {source}")]
    Reference {
        path: String,
        #[source]
        source: GraphError,
    },
}

fn render_all(errors: &[ParseError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a document according to its declared format.
pub fn parse(doc: &SourceDoc) -> Result<ProcessGraph, IngestError> {
    match doc.format {
        SourceFormat::Pidl => parse_pidl(doc),
        SourceFormat::GraphJson => parse_graph_json(doc),
    }
}

/// Decodes UTF-8, reporting the position of the first bad byte.
fn decode_utf8(content: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(content).map_err(|e| {
        let valid = std::str::from_utf8(&content[..e.valid_up_to()]).expect("valid prefix");
        let line = valid.matches('\n').count() + 1;
        let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError {
            line,
            column,
            message: "invalid UTF-8".into(),
            snippet: String::new(),
        }
    })
}
