//! The intermediate process graph: plant elements with nozzles, pipes and
//! control signals between them, and free-form metadata.
//!
//! Every mutation either succeeds and leaves all invariants intact or fails
//! and leaves the graph untouched:
//!
//! - node and edge tags are unique (nodes and edges are separate namespaces);
//! - every edge endpoint resolves to a node, and for pipes, to a nozzle;
//! - pipes run from an outlet nozzle to an inlet nozzle;
//! - a nozzle carries at most one pipe;
//! - signals connect nodes directly and touch only instruments, controllers,
//!   valves and pumps.
//!
//! Port cardinality per kind is deliberately not enforced here; the
//! validator reports it so that defective plants can still be loaded.

mod element;

use std::collections::BTreeMap;

pub use element::{
    is_numeric_key, AttrValue, Attrs, Direction, Edge, EdgeKind, Endpoint, Frame, Node, NodeKind,
    Nozzle, Position, UnknownKind, NUMERIC_KEYS, SPLIT_PREFIX,
};

/// Longest tag accepted in hand-authored documents.
pub const MAX_AUTHORED_TAG_LEN: usize = 64;

fn is_authored_tag_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')
}

/// Tags written by people: `A-Z a-z 0-9 - _ .`, at most 64 characters.
pub fn is_authored_tag(tag: &str) -> bool {
    !tag.is_empty() && tag.len() <= MAX_AUTHORED_TAG_LEN && tag.chars().all(is_authored_tag_char)
}

/// Tags accepted by the graph. On top of the authored alphabet, `@` and `+`
/// appear in tags generated by rewriting and splicing, which may also exceed
/// the authored length limit.
pub fn is_valid_tag(tag: &str) -> bool {
    !tag.is_empty() && tag.chars().all(|c| is_authored_tag_char(c) || c == '@' || c == '+')
}

/// Nozzle ids never contain `.`, which separates node and nozzle in `TAG.NOZ`.
pub fn is_valid_nozzle_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate tag '{0}'")]
    DuplicateTag(String),
    #[error("invalid tag '{0}'")]
    InvalidTag(String),
    #[error("invalid node '{tag}': {reason}")]
    InvalidNode { tag: String, reason: String },
    #[error("invalid edge '{tag}': {reason}")]
    InvalidEdge { tag: String, reason: String },
    #[error("edge '{edge}' references unknown endpoint '{endpoint}'")]
    UnknownEndpoint { edge: String, endpoint: String },
    #[error("edge '{edge}': nozzle '{endpoint}' already carries edge '{occupant}'")]
    NozzleOccupied {
        edge: String,
        endpoint: String,
        occupant: String,
    },
    #[error("edge '{edge}' must run outlet to inlet, but '{endpoint}' is an {found:?} nozzle")]
    DirectionViolation {
        edge: String,
        endpoint: String,
        found: Direction,
    },
    #[error("unknown tag '{0}'")]
    UnknownTag(String),
    #[error("removing '{tag}' would leave edges dangling: {}", edges.join(", "))]
    WouldDangle { tag: String, edges: Vec<String> },
}

/// Which way an incident edge points relative to the queried node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Heading {
    Incoming,
    Outgoing,
}

/// One incident edge as seen from a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    pub edge: String,
    pub neighbor: String,
    pub heading: Heading,
}

type PortKey = (String, String);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProcessGraph {
    meta: BTreeMap<String, String>,
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
    // (node, nozzle) -> pipe tag; derived from `edges`.
    occupancy: BTreeMap<PortKey, String>,
}

impl ProcessGraph {
    pub fn new(meta: BTreeMap<String, String>) -> Self {
        Self {
            meta,
            ..Self::default()
        }
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    pub fn node(&self, tag: &str) -> Option<&Node> {
        self.nodes.get(tag)
    }

    pub fn edge(&self, tag: &str) -> Option<&Edge> {
        self.edges.get(tag)
    }

    /// Nodes in tag order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in tag order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(move |e| e.kind == kind)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    /// The pipe attached to `node.nozzle`, if any.
    pub fn pipe_at(&self, node: &str, nozzle: &str) -> Option<&Edge> {
        self.occupancy
            .get(&(node.to_string(), nozzle.to_string()))
            .and_then(|tag| self.edges.get(tag))
    }

    /// Edges touching `tag`, in edge-tag order.
    pub fn incident_edges<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges
            .values()
            .filter(move |e| e.source.node == tag || e.target.node == tag)
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        validate_node(&node)?;
        if self.nodes.contains_key(&node.tag) {
            return Err(GraphError::DuplicateTag(node.tag));
        }
        self.nodes.insert(node.tag.clone(), node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        if !is_valid_tag(&edge.tag) {
            return Err(GraphError::InvalidTag(edge.tag));
        }
        if self.edges.contains_key(&edge.tag) {
            return Err(GraphError::DuplicateTag(edge.tag));
        }
        self.check_edge(&edge, None)?;
        if edge.kind == EdgeKind::ProcessFlow {
            for end in [&edge.source, &edge.target] {
                if let Some(nozzle) = &end.nozzle {
                    self.occupancy
                        .insert((end.node.clone(), nozzle.clone()), edge.tag.clone());
                }
            }
        }
        self.edges.insert(edge.tag.clone(), edge);
        Ok(())
    }

    pub fn remove_edge(&mut self, tag: &str) -> Result<Edge, GraphError> {
        let edge = self
            .edges
            .remove(tag)
            .ok_or_else(|| GraphError::UnknownTag(tag.to_string()))?;
        if edge.kind == EdgeKind::ProcessFlow {
            for end in [&edge.source, &edge.target] {
                if let Some(nozzle) = &end.nozzle {
                    self.occupancy.remove(&(end.node.clone(), nozzle.clone()));
                }
            }
        }
        Ok(edge)
    }

    /// Removes a node. With `cascade`, incident edges go with it; without,
    /// the call fails if any exist.
    pub fn remove_node(&mut self, tag: &str, cascade: bool) -> Result<Node, GraphError> {
        if !self.nodes.contains_key(tag) {
            return Err(GraphError::UnknownTag(tag.to_string()));
        }
        let incident: Vec<String> = self.incident_edges(tag).map(|e| e.tag.clone()).collect();
        if !incident.is_empty() && !cascade {
            return Err(GraphError::WouldDangle {
                tag: tag.to_string(),
                edges: incident,
            });
        }
        for edge in &incident {
            self.remove_edge(edge)?;
        }
        Ok(self.nodes.remove(tag).expect("presence checked above"))
    }

    /// Swaps in a new version of an existing node. Every nozzle carrying a
    /// pipe must survive with the same direction.
    pub fn replace_node(&mut self, node: Node) -> Result<Node, GraphError> {
        validate_node(&node)?;
        if !self.nodes.contains_key(&node.tag) {
            return Err(GraphError::UnknownTag(node.tag));
        }
        for ((owner, nozzle), edge_tag) in &self.occupancy {
            if owner != &node.tag {
                continue;
            }
            let edge = &self.edges[edge_tag];
            let wanted = if edge.source.node == *owner && edge.source.nozzle.as_deref() == Some(nozzle) {
                Direction::Outlet
            } else {
                Direction::Inlet
            };
            match node.nozzle(nozzle) {
                Some(n) if n.direction == wanted => {}
                _ => {
                    return Err(GraphError::InvalidNode {
                        tag: node.tag.clone(),
                        reason: format!("nozzle '{nozzle}' carries edge '{edge_tag}' and must be kept"),
                    })
                }
            }
        }
        Ok(self.nodes.insert(node.tag.clone(), node).expect("presence checked above"))
    }

    pub fn set_node_attr(&mut self, tag: &str, key: &str, value: AttrValue) -> Result<(), GraphError> {
        check_attr(key, &value).map_err(|reason| GraphError::InvalidNode {
            tag: tag.to_string(),
            reason,
        })?;
        let node = self
            .nodes
            .get_mut(tag)
            .ok_or_else(|| GraphError::UnknownTag(tag.to_string()))?;
        node.attrs.insert(key.to_string(), value);
        Ok(())
    }

    pub fn set_edge_attr(&mut self, tag: &str, key: &str, value: AttrValue) -> Result<(), GraphError> {
        check_attr(key, &value).map_err(|reason| GraphError::InvalidEdge {
            tag: tag.to_string(),
            reason,
        })?;
        let edge = self
            .edges
            .get_mut(tag)
            .ok_or_else(|| GraphError::UnknownTag(tag.to_string()))?;
        edge.attrs.insert(key.to_string(), value);
        Ok(())
    }

    /// Incident edges of `tag`, optionally restricted to one kind, in edge-tag
    /// order. A self-loop appears twice: outgoing, then incoming.
    pub fn adjacency(&self, tag: &str, kind: Option<EdgeKind>) -> Result<Vec<Adjacency>, GraphError> {
        if !self.nodes.contains_key(tag) {
            return Err(GraphError::UnknownTag(tag.to_string()));
        }
        let mut out = Vec::new();
        for edge in self.edges.values() {
            if kind.is_some_and(|k| k != edge.kind) {
                continue;
            }
            if edge.source.node == tag {
                out.push(Adjacency {
                    edge: edge.tag.clone(),
                    neighbor: edge.target.node.clone(),
                    heading: Heading::Outgoing,
                });
            }
            if edge.target.node == tag {
                out.push(Adjacency {
                    edge: edge.tag.clone(),
                    neighbor: edge.source.node.clone(),
                    heading: Heading::Incoming,
                });
            }
        }
        Ok(out)
    }

    /// Full scan of every invariant. Mutations keep these by construction;
    /// this exists for tests and for checking graphs assembled elsewhere.
    pub fn check_integrity(&self) -> Result<(), GraphError> {
        for (tag, node) in &self.nodes {
            if tag != &node.tag {
                return Err(GraphError::InvalidNode {
                    tag: tag.clone(),
                    reason: format!("stored under key '{tag}' but tagged '{}'", node.tag),
                });
            }
            validate_node(node)?;
        }
        let mut seen: BTreeMap<PortKey, &str> = BTreeMap::new();
        for (tag, edge) in &self.edges {
            if tag != &edge.tag || !is_valid_tag(tag) {
                return Err(GraphError::InvalidTag(tag.clone()));
            }
            self.check_edge(edge, Some(tag))?;
            if edge.kind == EdgeKind::ProcessFlow {
                for end in [&edge.source, &edge.target] {
                    let key = (end.node.clone(), end.nozzle.clone().unwrap_or_default());
                    if let Some(first) = seen.insert(key, tag) {
                        return Err(GraphError::NozzleOccupied {
                            edge: tag.clone(),
                            endpoint: end.to_string(),
                            occupant: first.to_string(),
                        });
                    }
                }
            }
        }
        let derived: BTreeMap<PortKey, String> =
            seen.into_iter().map(|(k, v)| (k, v.to_string())).collect();
        if derived != self.occupancy {
            return Err(GraphError::InvalidEdge {
                tag: String::new(),
                reason: "nozzle occupancy index out of sync".into(),
            });
        }
        Ok(())
    }

    /// Checks endpoints and direction rules. `existing` names the edge itself
    /// when re-checking an edge already in the graph.
    fn check_edge(&self, edge: &Edge, existing: Option<&str>) -> Result<(), GraphError> {
        for (key, value) in &edge.attrs {
            check_attr(key, value).map_err(|reason| GraphError::InvalidEdge {
                tag: edge.tag.clone(),
                reason,
            })?;
        }
        match edge.kind {
            EdgeKind::Signal => {
                for end in [&edge.source, &edge.target] {
                    if end.nozzle.is_some() {
                        return Err(GraphError::InvalidEdge {
                            tag: edge.tag.clone(),
                            reason: "signal edges connect nodes, not nozzles".into(),
                        });
                    }
                    let node = self.nodes.get(&end.node).ok_or_else(|| GraphError::UnknownEndpoint {
                        edge: edge.tag.clone(),
                        endpoint: end.to_string(),
                    })?;
                    if !matches!(
                        node.kind,
                        NodeKind::Instrument | NodeKind::Controller | NodeKind::Valve | NodeKind::Pump
                    ) {
                        return Err(GraphError::InvalidEdge {
                            tag: edge.tag.clone(),
                            reason: format!("signals cannot touch {} node '{}'", node.kind, node.tag),
                        });
                    }
                }
            }
            EdgeKind::ProcessFlow => {
                for (end, wanted) in [(&edge.source, Direction::Outlet), (&edge.target, Direction::Inlet)] {
                    let unknown = || GraphError::UnknownEndpoint {
                        edge: edge.tag.clone(),
                        endpoint: end.to_string(),
                    };
                    let nozzle_id = end.nozzle.as_deref().ok_or_else(|| GraphError::InvalidEdge {
                        tag: edge.tag.clone(),
                        reason: format!("process-flow endpoint '{end}' must name a nozzle"),
                    })?;
                    let node = self.nodes.get(&end.node).ok_or_else(unknown)?;
                    let nozzle = node.nozzle(nozzle_id).ok_or_else(unknown)?;
                    if nozzle.direction != wanted {
                        return Err(GraphError::DirectionViolation {
                            edge: edge.tag.clone(),
                            endpoint: end.to_string(),
                            found: nozzle.direction,
                        });
                    }
                }
                // Occupancy only after both ends resolve.
                if existing.is_none() {
                    for end in [&edge.source, &edge.target] {
                        let key = (end.node.clone(), end.nozzle.clone().unwrap_or_default());
                        if let Some(occupant) = self.occupancy.get(&key) {
                            return Err(GraphError::NozzleOccupied {
                                edge: edge.tag.clone(),
                                endpoint: end.to_string(),
                                occupant: occupant.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_attr(key: &str, value: &AttrValue) -> Result<(), String> {
    if key.is_empty() {
        return Err("empty attribute key".into());
    }
    if !value.is_valid() {
        return Err(format!("attribute '{key}' is not finite"));
    }
    if is_numeric_key(key) && value.as_number().is_none() {
        return Err(format!("attribute '{key}' must be a number"));
    }
    Ok(())
}

fn validate_node(node: &Node) -> Result<(), GraphError> {
    if !is_valid_tag(&node.tag) {
        return Err(GraphError::InvalidTag(node.tag.clone()));
    }
    let invalid = |reason: String| GraphError::InvalidNode {
        tag: node.tag.clone(),
        reason,
    };
    if let NodeKind::Other(name) = &node.kind {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(invalid(format!("invalid kind name '{name}'")));
        }
    }
    let mut ids = std::collections::BTreeSet::new();
    let mut ordinals = std::collections::BTreeSet::new();
    for nozzle in &node.nozzles {
        if !is_valid_nozzle_id(&nozzle.id) {
            return Err(invalid(format!("invalid nozzle id '{}'", nozzle.id)));
        }
        if !ids.insert(nozzle.id.as_str()) {
            return Err(invalid(format!("duplicate nozzle id '{}'", nozzle.id)));
        }
        if !ordinals.insert((nozzle.direction, nozzle.ordinal)) {
            return Err(invalid(format!(
                "duplicate {} ordinal {}",
                nozzle.direction.name(),
                nozzle.ordinal
            )));
        }
    }
    for (key, value) in &node.attrs {
        check_attr(key, value).map_err(invalid)?;
    }
    if node.position.as_ref().is_some_and(|p| !p.is_finite()) {
        return Err(invalid("position is not finite".into()));
    }
    Ok(())
}
