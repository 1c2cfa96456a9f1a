//! Graph-to-graph transformations: fidelity filtering, simulator-compliance
//! rewriting and merging of models from different sources.
//!
//! None of these mutate their input; each returns a new graph.

mod fidelity;
mod merge;
mod rewrite;

use crate::graph::{GraphError, NodeKind};

pub use fidelity::{filter_fidelity, Fidelity, FidelityProfile};
pub use merge::{conflicts_to_json, merge, Conflict, ConflictPolicy, MergePolicy};
pub use rewrite::{
    apply_ruleset, AttrTarget, RewriteAction, RewriteEntry, RewriteLog, Rule, RuleKind, RuleSet,
};

/// Which namespace a tag belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Node,
    Edge,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("instrument '{tag}' has {inlets} inbound and {outlets} outbound pipes and cannot be spliced out")]
    UnspliceableInstrument {
        tag: String,
        inlets: usize,
        outlets: usize,
    },
    #[error("node '{tag}' is dropped by the profile but carries process flow")]
    DroppedProcessNode { tag: String },
    #[error("generated tag '{tag}' is already in use")]
    TagCollision { tag: String },
    #[error("node '{tag}' is a {kind_a} in the first model but a {kind_b} in the second")]
    KindMismatch {
        tag: String,
        kind_a: NodeKind,
        kind_b: NodeKind,
    },
    #[error("nozzle '{nozzle}' of '{tag}' has different directions in the two models")]
    NozzleMismatch { tag: String, nozzle: String },
    #[error("invalid merge policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A rule set, profile or policy file that failed to load.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}
