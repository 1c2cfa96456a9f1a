//! Serializers for the process graph and the simulator-neutral model spec.
//!
//! Every writer is deterministic: nodes and edges are emitted in tag order
//! and JSON object keys are sorted, so equal graphs produce equal bytes.

mod dot;
mod graphml;
mod json;
mod simspec;

pub use dot::to_dot;
pub use graphml::to_graphml;
pub use json::{to_canonical_json, to_json};
pub(crate) use json::{edge_to_value as edge_value, node_to_value as node_value};
pub use simspec::{to_simspec, Component, Connection, ExportError, SignalLink, SimSpec};
