//! Unification of two models of the same plant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConfigError, Element, TransformError};
use crate::graph::{AttrValue, Attrs, Edge, EdgeKind, Endpoint, GraphError, Node, ProcessGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictPolicy {
    PreferA,
    PreferB,
    /// Keep the first model's value.
    #[default]
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MergePolicy {
    /// Relative tolerance for numeric agreement.
    pub numeric_tolerance: f64,
    pub on_conflict: ConflictPolicy,
}

impl Default for MergePolicy {
    fn default() -> Self {
        Self {
            numeric_tolerance: 1e-6,
            on_conflict: ConflictPolicy::Report,
        }
    }
}

impl MergePolicy {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let policy: MergePolicy = serde_json::from_str(text)?;
        policy.check().map_err(ConfigError::Invalid)?;
        Ok(policy)
    }

    fn check(&self) -> Result<(), String> {
        if self.numeric_tolerance.is_finite() && self.numeric_tolerance >= 0.0 {
            Ok(())
        } else {
            Err(format!("numeric_tolerance must be a finite value >= 0, got {}", self.numeric_tolerance))
        }
    }

    /// Whether two attribute values agree under this policy.
    pub fn agrees(&self, a: &AttrValue, b: &AttrValue) -> bool {
        match (a, b) {
            (AttrValue::Number(x), AttrValue::Number(y)) => {
                (x - y).abs() <= self.numeric_tolerance * x.abs().max(y.abs())
            }
            _ => a == b,
        }
    }
}

/// An attribute the two models disagree on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub element: Element,
    /// For edges, the first model's tag.
    pub tag: String,
    pub key: String,
    pub value_a: AttrValue,
    pub value_b: AttrValue,
}

fn union_attrs(
    element: Element,
    tag: &str,
    a: &Attrs,
    b: &Attrs,
    policy: &MergePolicy,
    conflicts: &mut Vec<Conflict>,
) -> Attrs {
    let mut out = a.clone();
    for (key, vb) in b {
        match a.get(key) {
            None => {
                out.insert(key.clone(), vb.clone());
            }
            Some(va) if policy.agrees(va, vb) => {}
            Some(va) => {
                conflicts.push(Conflict {
                    element,
                    tag: tag.to_string(),
                    key: key.clone(),
                    value_a: va.clone(),
                    value_b: vb.clone(),
                });
                if policy.on_conflict == ConflictPolicy::PreferB {
                    out.insert(key.clone(), vb.clone());
                }
            }
        }
    }
    out
}

fn merge_node(a: &Node, b: &Node, policy: &MergePolicy, conflicts: &mut Vec<Conflict>) -> Result<Node, TransformError> {
    if a.kind != b.kind {
        return Err(TransformError::KindMismatch {
            tag: a.tag.clone(),
            kind_a: a.kind.clone(),
            kind_b: b.kind.clone(),
        });
    }
    let mut node = a.clone();
    node.attrs = union_attrs(Element::Node, &a.tag, &a.attrs, &b.attrs, policy, conflicts);
    if node.position.is_none() {
        node.position = b.position.clone();
    }
    for nozzle in &b.nozzles {
        match a.nozzle(&nozzle.id) {
            Some(existing) if existing.direction != nozzle.direction => {
                return Err(TransformError::NozzleMismatch {
                    tag: a.tag.clone(),
                    nozzle: nozzle.id.clone(),
                })
            }
            Some(_) => {}
            None => node.nozzles.push(nozzle.clone()),
        }
    }
    Ok(node)
}

fn add_new_edge(g: &mut ProcessGraph, edge: Edge) -> Result<(), TransformError> {
    g.add_edge(edge).map_err(|e| match e {
        GraphError::DuplicateTag(tag) => TransformError::TagCollision { tag },
        other => TransformError::Graph(other),
    })
}

/// Merges `b` into `a`. Nodes match by tag, edges by endpoints and kind.
/// Conflicts are returned under every policy; the policy picks the value kept.
pub fn merge(a: &ProcessGraph, b: &ProcessGraph, policy: &MergePolicy) -> Result<(ProcessGraph, Vec<Conflict>), TransformError> {
    policy.check().map_err(TransformError::InvalidPolicy)?;
    let mut g = a.clone();
    let mut conflicts = Vec::new();

    for (key, value) in b.meta() {
        if !g.meta().contains_key(key) {
            g.set_meta(key.clone(), value.clone());
        }
    }

    for nb in b.nodes() {
        match a.node(&nb.tag) {
            None => g.add_node(nb.clone())?,
            Some(na) => {
                let merged = merge_node(na, nb, policy, &mut conflicts)?;
                g.replace_node(merged)?;
            }
        }
    }

    // a's edges grouped by match key, consumed in tag order.
    let mut unmatched: BTreeMap<(Endpoint, Endpoint, EdgeKind), Vec<&Edge>> = BTreeMap::new();
    for e in a.edges() {
        unmatched
            .entry((e.source.clone(), e.target.clone(), e.kind))
            .or_default()
            .push(e);
    }
    for list in unmatched.values_mut() {
        list.reverse();
    }

    for eb in b.edges() {
        let key = (eb.source.clone(), eb.target.clone(), eb.kind);
        match unmatched.get_mut(&key).and_then(Vec::pop) {
            Some(ea) => {
                let attrs = union_attrs(Element::Edge, &ea.tag, &ea.attrs, &eb.attrs, policy, &mut conflicts);
                for (k, v) in attrs {
                    if ea.attrs.get(&k) != Some(&v) {
                        g.set_edge_attr(&ea.tag, &k, v)?;
                    }
                }
            }
            None => add_new_edge(&mut g, eb.clone())?,
        }
    }

    Ok((g, conflicts))
}

/// Conflicts as a canonical JSON array.
pub fn conflicts_to_json(conflicts: &[Conflict]) -> String {
    let value = serde_json::to_value(conflicts).expect("conflicts serialize");
    crate::export::to_canonical_json(&value)
}
