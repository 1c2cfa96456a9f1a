use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConfigError, TransformError};
use crate::graph::{AttrValue, Edge, EdgeKind, NodeKind, ProcessGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    SteadyState,
    Dynamic,
}

impl Fidelity {
    pub fn name(self) -> &'static str {
        match self {
            Fidelity::SteadyState => "steady_state",
            Fidelity::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a simulation of a given fidelity keeps from the plant graph and
/// which attributes it needs. `other:*` in `retained_node_kinds` retains
/// every `other:<name>` kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityProfile {
    pub name: Fidelity,
    pub retained_node_kinds: BTreeSet<NodeKind>,
    pub retained_edge_kinds: BTreeSet<EdgeKind>,
    #[serde(default)]
    pub required_attrs: BTreeMap<NodeKind, BTreeSet<String>>,
}

fn any_other() -> NodeKind {
    NodeKind::Other("*".into())
}

fn keys(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl FidelityProfile {
    /// Drops instruments, controllers and signals.
    pub fn steady_state() -> Self {
        let retained_node_kinds = NodeKind::NAMED
            .iter()
            .filter(|k| !matches!(k, NodeKind::Instrument | NodeKind::Controller))
            .cloned()
            .chain([any_other()])
            .collect();
        Self {
            name: Fidelity::SteadyState,
            retained_node_kinds,
            retained_edge_kinds: BTreeSet::from([EdgeKind::ProcessFlow]),
            required_attrs: BTreeMap::from([
                (NodeKind::Source, keys(&["flow"])),
                (NodeKind::Pump, keys(&["max_flow"])),
            ]),
        }
    }

    /// Keeps everything; additionally needs tank volumes.
    pub fn dynamic() -> Self {
        Self {
            name: Fidelity::Dynamic,
            retained_node_kinds: NodeKind::NAMED.iter().cloned().chain([any_other()]).collect(),
            retained_edge_kinds: BTreeSet::from([EdgeKind::ProcessFlow, EdgeKind::Signal]),
            required_attrs: BTreeMap::from([
                (NodeKind::Source, keys(&["flow"])),
                (NodeKind::Pump, keys(&["max_flow"])),
                (NodeKind::Tank, keys(&["volume"])),
            ]),
        }
    }

    /// `steady`, `steady_state` or `dynamic`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "steady" | "steady_state" => Some(Self::steady_state()),
            "dynamic" => Some(Self::dynamic()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let profile: Self = serde_json::from_str(text)?;
        profile.check()?;
        Ok(profile)
    }

    pub fn retains_node(&self, kind: &NodeKind) -> bool {
        self.retained_node_kinds.contains(kind)
            || (kind.is_other() && self.retained_node_kinds.contains(&any_other()))
    }

    pub fn retains_edge(&self, kind: EdgeKind) -> bool {
        self.retained_edge_kinds.contains(&kind)
    }

    /// Required attribute keys for nodes of `kind`.
    pub fn required_for(&self, kind: &NodeKind) -> impl Iterator<Item = &String> {
        self.required_attrs.get(kind).into_iter().flatten()
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        for kind in self.required_attrs.keys() {
            if !self.retains_node(kind) {
                return Err(ConfigError::Invalid(format!(
                    "required attributes listed for '{kind}', which the profile drops"
                )));
            }
        }
        match self.name {
            Fidelity::SteadyState => {
                if self.retains_node(&NodeKind::Instrument)
                    || self.retains_node(&NodeKind::Controller)
                    || self.retains_edge(EdgeKind::Signal)
                {
                    return Err(ConfigError::Invalid(
                        "a steady-state profile must drop instruments, controllers and signals".into(),
                    ));
                }
            }
            Fidelity::Dynamic => {
                let all_nodes = NodeKind::NAMED.iter().chain([&any_other()]).all(|k| self.retains_node(k));
                let all_edges = self.retains_edge(EdgeKind::ProcessFlow) && self.retains_edge(EdgeKind::Signal);
                if !all_nodes || !all_edges {
                    return Err(ConfigError::Invalid("a dynamic profile must retain every kind".into()));
                }
            }
        }
        Ok(())
    }
}

/// Keeps the nodes and edges `profile` retains. An in-line instrument
/// (one inbound, one outbound pipe) that the profile drops is spliced out:
/// its two pipes become one pipe `<up>+<down>` carrying the upstream
/// attributes, with lengths summed when both pipes have one.
pub fn filter_fidelity(graph: &ProcessGraph, profile: &FidelityProfile) -> Result<ProcessGraph, TransformError> {
    let mut out = graph.clone();
    let dropped: Vec<(String, NodeKind)> = out
        .nodes()
        .filter(|n| !profile.retains_node(&n.kind))
        .map(|n| (n.tag.clone(), n.kind.clone()))
        .collect();

    for (tag, kind) in dropped {
        let pipes: Vec<Edge> = out
            .incident_edges(&tag)
            .filter(|e| e.kind == EdgeKind::ProcessFlow)
            .cloned()
            .collect();
        let inbound: Vec<&Edge> = pipes.iter().filter(|e| e.target.node == tag).collect();
        let outbound: Vec<&Edge> = pipes.iter().filter(|e| e.source.node == tag).collect();
        match (inbound.as_slice(), outbound.as_slice()) {
            ([], []) => {
                out.remove_node(&tag, true)?;
            }
            ([up], [down]) if kind == NodeKind::Instrument && up.tag != down.tag => {
                let spliced = splice(up, down);
                if out.edge(&spliced.tag).is_some() {
                    return Err(TransformError::TagCollision { tag: spliced.tag });
                }
                out.remove_node(&tag, true)?;
                out.add_edge(spliced)?;
            }
            _ if kind == NodeKind::Instrument => {
                return Err(TransformError::UnspliceableInstrument {
                    tag,
                    inlets: inbound.len(),
                    outlets: outbound.len(),
                })
            }
            _ => return Err(TransformError::DroppedProcessNode { tag }),
        }
    }

    let unwanted: Vec<String> = out
        .edges()
        .filter(|e| !profile.retains_edge(e.kind))
        .map(|e| e.tag.clone())
        .collect();
    for tag in unwanted {
        out.remove_edge(&tag)?;
    }
    out.set_meta("fidelity", profile.name.name());
    Ok(out)
}

fn splice(up: &Edge, down: &Edge) -> Edge {
    let mut attrs = down.attrs.clone();
    attrs.extend(up.attrs.clone());
    match (up.number("length"), down.number("length")) {
        (Some(a), Some(b)) => {
            attrs.insert("length".into(), AttrValue::Number(a + b));
        }
        _ => {
            attrs.remove("length");
        }
    }
    Edge {
        tag: format!("{}+{}", up.tag, down.tag),
        kind: EdgeKind::ProcessFlow,
        source: up.source.clone(),
        target: down.target.clone(),
        attrs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Endpoint, Node};

    fn chain() -> ProcessGraph {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source).with_attr("flow", 10.0)).unwrap();
        g.add_node(Node::new("FT1", NodeKind::Instrument)).unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_node(Node::new("C1", NodeKind::Controller)).unwrap();
        g.add_edge(
            Edge::pipe("E1", Endpoint::port("S1", "out1"), Endpoint::port("FT1", "in1"))
                .with_attr("diameter", 0.05)
                .with_attr("length", 2.0)
                .with_attr("material", "water"),
        )
        .unwrap();
        g.add_edge(
            Edge::pipe("E2", Endpoint::port("FT1", "out1"), Endpoint::port("K1", "in1"))
                .with_attr("diameter", 0.04)
                .with_attr("length", 3.0),
        )
        .unwrap();
        g.add_edge(Edge::signal("s1", "FT1", "C1")).unwrap();
        g
    }

    #[test]
    fn dynamic_keeps_everything() {
        let g = chain();
        let out = filter_fidelity(&g, &FidelityProfile::dynamic()).unwrap();
        let mut expected = g.clone();
        expected.set_meta("fidelity", "dynamic");
        assert_eq!(out, expected);
    }

    #[test]
    fn steady_state_splices_inline_instrument() {
        let out = filter_fidelity(&chain(), &FidelityProfile::steady_state()).unwrap();
        let tags: Vec<_> = out.nodes().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, ["K1", "S1"]);
        assert_eq!(out.edge_count(), 1);
        let e = out.edge("E1+E2").unwrap();
        assert_eq!(e.source, Endpoint::port("S1", "out1"));
        assert_eq!(e.target, Endpoint::port("K1", "in1"));
        assert_eq!(e.number("diameter"), Some(0.05));
        assert_eq!(e.number("length"), Some(5.0));
        assert_eq!(e.attrs["material"], AttrValue::Text("water".into()));
        assert_eq!(out.meta()["fidelity"], "steady_state");
        out.check_integrity().unwrap();
    }

    #[test]
    fn splice_drops_partial_length() {
        let up = Edge::pipe("a", Endpoint::port("X", "out1"), Endpoint::port("F", "in1")).with_attr("length", 1.0);
        let down = Edge::pipe("b", Endpoint::port("F", "out1"), Endpoint::port("Y", "in1")).with_attr("diameter", 0.1);
        let e = splice(&up, &down);
        assert_eq!(e.tag, "a+b");
        assert!(!e.attrs.contains_key("length"));
        assert_eq!(e.number("diameter"), Some(0.1));
    }

    #[test]
    fn chained_instruments_splice_in_sequence() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source)).unwrap();
        g.add_node(Node::new("FT2", NodeKind::Instrument)).unwrap();
        g.add_node(Node::new("FT1", NodeKind::Instrument)).unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_edge(Edge::pipe("E1", Endpoint::port("S1", "out1"), Endpoint::port("FT2", "in1"))).unwrap();
        g.add_edge(Edge::pipe("E2", Endpoint::port("FT2", "out1"), Endpoint::port("FT1", "in1"))).unwrap();
        g.add_edge(Edge::pipe("E3", Endpoint::port("FT1", "out1"), Endpoint::port("K1", "in1"))).unwrap();
        let out = filter_fidelity(&g, &FidelityProfile::steady_state()).unwrap();
        assert_eq!(out.edges().map(|e| e.tag.as_str()).collect::<Vec<_>>(), ["E1+E2+E3"]);
    }

    #[test]
    fn dangling_instrument_is_unspliceable() {
        let mut g = chain();
        g.remove_edge("E2").unwrap();
        let err = filter_fidelity(&g, &FidelityProfile::steady_state()).unwrap_err();
        assert_eq!(
            err,
            TransformError::UnspliceableInstrument {
                tag: "FT1".into(),
                inlets: 1,
                outlets: 0
            }
        );
    }

    #[test]
    fn presets_are_consistent() {
        FidelityProfile::steady_state().check().unwrap();
        FidelityProfile::dynamic().check().unwrap();
        assert!(FidelityProfile::steady_state().retains_node(&NodeKind::Other("reactor".into())));
        assert!(!FidelityProfile::steady_state().retains_node(&NodeKind::Instrument));
        assert_eq!(FidelityProfile::preset("steady"), Some(FidelityProfile::steady_state()));
        assert!(FidelityProfile::preset("fast").is_none());
    }

    #[test]
    fn profile_json() {
        let text = serde_json::to_string(&FidelityProfile::steady_state()).unwrap();
        assert!(text.contains(r#""name":"steady_state""#), "{text}");
        assert!(text.contains(r#""required_attrs":{"pump":["max_flow"],"source":["flow"]}"#), "{text}");
        assert_eq!(FidelityProfile::from_json(&text).unwrap(), FidelityProfile::steady_state());

        let bad = r#"{"name":"steady_state","retained_node_kinds":["tank","instrument"],"retained_edge_kinds":["process_flow"]}"#;
        assert!(matches!(FidelityProfile::from_json(bad), Err(ConfigError::Invalid(_))));
        let orphan = r#"{"name":"steady_state","retained_node_kinds":["tank"],"retained_edge_kinds":["process_flow"],"required_attrs":{"pump":["max_flow"]}}"#;
        assert!(matches!(FidelityProfile::from_json(orphan), Err(ConfigError::Invalid(_))));
        let unknown = r#"{"name":"steady_state","retained_node_kinds":[],"retained_edge_kinds":[],"extra":1}"#;
        assert!(matches!(FidelityProfile::from_json(unknown), Err(ConfigError::Json(_))));
    }
}
