use serde::Serialize;

use super::to_canonical_json;
use crate::graph::{Attrs, EdgeKind, NodeKind, ProcessGraph};

/// Simulator-neutral model: unit operations plus the streams between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSpec {
    pub simulator_name: String,
    pub fidelity: String,
    pub components: Vec<Component>,
    pub connections: Vec<Connection>,
    pub signals: Vec<SignalLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub tag: String,
    pub kind: NodeKind,
    pub params: Attrs,
}

/// One stream node with its inbound and outbound pipe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Connection {
    pub stream: String,
    pub from: String,
    pub from_nozzle: String,
    pub to: String,
    pub to_nozzle: String,
    pub params: Attrs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalLink {
    pub tag: String,
    pub from: String,
    pub to: String,
}

impl SimSpec {
    /// Canonical JSON, sorted keys, no whitespace.
    pub fn to_json(&self) -> String {
        to_canonical_json(&serde_json::to_value(self).expect("SimSpec always serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("simulator name is empty")]
    EmptySimulatorName,
    #[error("graph has no 'fidelity' metadata; run the fidelity filter first")]
    MissingFidelity,
    #[error("pipe '{edge}' is not mediated by exactly one stream node; apply stream insertion first")]
    NotRewritten { edge: String },
    #[error("stream node '{tag}' {reason}")]
    MalformedStream { tag: String, reason: String },
}

/// Builds a [`SimSpec`] from a graph whose pipes have all been split
/// around stream nodes.
pub fn to_simspec(graph: &ProcessGraph, simulator_name: &str) -> Result<SimSpec, ExportError> {
    if simulator_name.is_empty() {
        return Err(ExportError::EmptySimulatorName);
    }
    let fidelity = graph
        .meta()
        .get("fidelity")
        .cloned()
        .ok_or(ExportError::MissingFidelity)?;
    let is_stream = |tag: &str| graph.node(tag).is_some_and(|n| n.kind == NodeKind::Stream);

    for edge in graph.edges_of_kind(EdgeKind::ProcessFlow) {
        if is_stream(&edge.source.node) == is_stream(&edge.target.node) {
            return Err(ExportError::NotRewritten {
                edge: edge.tag.clone(),
            });
        }
    }

    let mut components = Vec::new();
    let mut connections = Vec::new();
    for node in graph.nodes() {
        if node.kind != NodeKind::Stream {
            components.push(Component {
                tag: node.tag.clone(),
                kind: node.kind.clone(),
                params: node.attrs.clone(),
            });
            continue;
        }
        let pipes: Vec<_> = graph
            .incident_edges(&node.tag)
            .filter(|e| e.kind == EdgeKind::ProcessFlow)
            .collect();
        let inbound: Vec<_> = pipes.iter().filter(|e| e.target.node == node.tag).collect();
        let outbound: Vec<_> = pipes.iter().filter(|e| e.source.node == node.tag).collect();
        let (upstream, downstream) = match (inbound.as_slice(), outbound.as_slice()) {
            ([up], [down]) => (up, down),
            _ => {
                return Err(ExportError::MalformedStream {
                    tag: node.tag.clone(),
                    reason: format!(
                        "needs one inbound and one outbound pipe, has {} and {}",
                        inbound.len(),
                        outbound.len()
                    ),
                })
            }
        };
        connections.push(Connection {
            stream: node.tag.clone(),
            from: upstream.source.node.clone(),
            from_nozzle: upstream.source.nozzle.clone().unwrap_or_default(),
            to: downstream.target.node.clone(),
            to_nozzle: downstream.target.nozzle.clone().unwrap_or_default(),
            params: node.attrs.clone(),
        });
    }
    let signals = graph
        .edges_of_kind(EdgeKind::Signal)
        .map(|e| SignalLink {
            tag: e.tag.clone(),
            from: e.source.node.clone(),
            to: e.target.node.clone(),
        })
        .collect();

    Ok(SimSpec {
        simulator_name: simulator_name.to_string(),
        fidelity,
        components,
        connections,
        signals,
    })
}
