//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use pidtwin_core::graph::{
    AttrValue, Direction, Edge, EdgeKind, Endpoint, Node, NodeKind, Nozzle, Position, ProcessGraph,
};
use proptest::prelude::*;

pub const KINDS: [&str; 13] = [
    "tank", "pump", "valve", "mixer", "splitter", "hx", "instrument", "controller", "source", "sink", "stream",
    "other:nozzle", "other:filter",
];

#[derive(Debug, Clone)]
pub struct NodeSpec {
    kind: usize,
    inlets: u32,
    outlets: u32,
    attrs: Vec<(usize, AttrValue)>,
    position: Option<(bool, f64, f64, f64)>,
}

/// Choice of one edge among the free slots when the graph is assembled.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    signal: bool,
    from: usize,
    to: usize,
    attrs: Vec<(usize, AttrValue)>,
}

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub meta: Vec<(String, String)>,
}

const ATTR_KEYS: [&str; 7] = ["volume", "max_flow", "diameter", "length", "material", "note", "heated"];

fn attr_value(key: usize) -> BoxedStrategy<AttrValue> {
    match ATTR_KEYS[key] {
        "material" | "note" => "[a-z ]{0,8}".prop_map(AttrValue::Text).boxed(),
        "heated" => any::<bool>().prop_map(AttrValue::Bool).boxed(),
        _ => prop_oneof![
            (1u32..1000).prop_map(|v| AttrValue::Number(f64::from(v))),
            (1e-6f64..1e6).prop_map(AttrValue::Number),
        ]
        .boxed(),
    }
}

fn attrs() -> impl Strategy<Value = Vec<(usize, AttrValue)>> {
    prop::collection::vec((0..ATTR_KEYS.len()).prop_flat_map(|k| (Just(k), attr_value(k))), 0..4)
}

fn node_spec() -> impl Strategy<Value = NodeSpec> {
    (
        0..KINDS.len(),
        0u32..4,
        0u32..4,
        attrs(),
        prop::option::of((any::<bool>(), -1e4f64..1e4, -1e4f64..1e4, -100f64..100.0)),
    )
        .prop_map(|(kind, inlets, outlets, attrs, position)| NodeSpec {
            kind,
            inlets,
            outlets,
            attrs,
            position,
        })
}

fn edge_spec() -> impl Strategy<Value = EdgeSpec> {
    (prop::bool::weighted(0.2), any::<usize>(), any::<usize>(), attrs()).prop_map(|(signal, from, to, attrs)| {
        EdgeSpec {
            signal,
            from,
            to,
            attrs,
        }
    })
}

/// Random graph descriptions with up to `max_nodes` nodes.
pub fn graph_spec(max_nodes: usize) -> impl Strategy<Value = GraphSpec> {
    (
        prop::collection::vec(node_spec(), 0..=max_nodes),
        prop::collection::vec(edge_spec(), 0..=max_nodes * 2),
        prop::collection::vec(("[a-z]{1,6}", "[ -~]{0,10}"), 0..3),
    )
        .prop_map(|(nodes, edges, meta)| GraphSpec { nodes, edges, meta })
}

fn tag(prefix: &str, i: usize) -> String {
    format!("{prefix}{i}")
}

impl GraphSpec {
    pub fn node(&self, i: usize) -> Node {
        let spec = &self.nodes[i];
        let kind: NodeKind = KINDS[spec.kind].parse().unwrap();
        let mut node = Node::new(tag("N", i), kind).with_nozzles(Nozzle::numbered(spec.inlets, spec.outlets));
        for (k, v) in &spec.attrs {
            node.attrs.insert(ATTR_KEYS[*k].to_string(), v.clone());
        }
        node.position = spec.position.map(|(plant, x, y, z)| {
            if plant {
                Position::plant(x, y, z)
            } else {
                Position::document(x, y)
            }
        });
        node
    }

    /// The edges in the order they are added; each picks among the slots
    /// still free at that point.
    pub fn edges(&self) -> Vec<Edge> {
        let nodes: Vec<Node> = (0..self.nodes.len()).map(|i| self.node(i)).collect();
        let mut free_out: Vec<(String, String)> = Vec::new();
        let mut free_in: Vec<(String, String)> = Vec::new();
        for n in &nodes {
            for z in &n.nozzles {
                let slot = (n.tag.clone(), z.id.clone());
                match z.direction {
                    Direction::Outlet => free_out.push(slot),
                    Direction::Inlet => free_in.push(slot),
                }
            }
        }
        let signal_nodes: Vec<&str> = nodes
            .iter()
            .filter(|n| {
                matches!(
                    n.kind,
                    NodeKind::Instrument | NodeKind::Controller | NodeKind::Valve | NodeKind::Pump
                )
            })
            .map(|n| n.tag.as_str())
            .collect();

        let mut out = Vec::new();
        for (i, spec) in self.edges.iter().enumerate() {
            let mut edge = if spec.signal {
                if signal_nodes.is_empty() {
                    continue;
                }
                let a = signal_nodes[spec.from % signal_nodes.len()];
                let b = signal_nodes[spec.to % signal_nodes.len()];
                Edge::signal(tag("X", i), a, b)
            } else {
                if free_out.is_empty() || free_in.is_empty() {
                    continue;
                }
                let (a, o) = free_out.remove(spec.from % free_out.len());
                let (b, n) = free_in.remove(spec.to % free_in.len());
                Edge::pipe(tag("E", i), Endpoint::port(a, o), Endpoint::port(b, n))
            };
            for (k, v) in &spec.attrs {
                edge.attrs.insert(ATTR_KEYS[*k].to_string(), v.clone());
            }
            out.push(edge);
        }
        out
    }

    pub fn build(&self) -> ProcessGraph {
        self.build_with(|v| v)
    }

    /// Builds with node and edge insertion order rearranged by `order`.
    pub fn build_with(&self, order: impl Fn(Vec<usize>) -> Vec<usize>) -> ProcessGraph {
        let mut g = ProcessGraph::new(self.meta.iter().cloned().collect());
        for i in order((0..self.nodes.len()).collect()) {
            g.add_node(self.node(i)).unwrap();
        }
        let edges = self.edges();
        for i in order((0..edges.len()).collect()) {
            g.add_edge(edges[i].clone()).unwrap();
        }
        g
    }
}

/// Tag pairs (u, v), u != v, with a directed process path u -> v. Plain BFS.
pub fn process_reachability(g: &ProcessGraph) -> BTreeSet<(String, String)> {
    let mut next: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in g.edges_of_kind(EdgeKind::ProcessFlow) {
        next.entry(&e.source.node).or_default().push(&e.target.node);
    }
    let mut pairs = BTreeSet::new();
    for start in g.nodes().map(|n| n.tag.as_str()) {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in next.get(u).into_iter().flatten() {
                if seen.insert(v) {
                    queue.push_back(v);
                }
                if v != start {
                    pairs.insert((start.to_string(), v.to_string()));
                }
            }
        }
    }
    pairs
}

/// Flows by repeated propagation: each node pushes its current inflow (or
/// source spec, or split share) onto its outlets until nothing changes.
pub fn fixed_point_flows(g: &ProcessGraph, iterations: usize, tol: f64) -> Option<BTreeMap<String, f64>> {
    let pipes: Vec<&Edge> = g.edges_of_kind(EdgeKind::ProcessFlow).collect();
    let mut flow: BTreeMap<String, f64> = pipes.iter().map(|e| (e.tag.clone(), 0.0)).collect();
    for _ in 0..iterations {
        let mut inflow: BTreeMap<&str, f64> = BTreeMap::new();
        for e in &pipes {
            *inflow.entry(e.target.node.as_str()).or_default() += flow[&e.tag];
        }
        let mut change = 0.0f64;
        let mut next = flow.clone();
        for e in &pipes {
            let node = g.node(&e.source.node).unwrap();
            let into = inflow.get(node.tag.as_str()).copied().unwrap_or(0.0);
            let outlets = g.incident_edges(&node.tag).filter(|x| x.source.node == node.tag && x.kind == EdgeKind::ProcessFlow).count();
            let value = match node.kind {
                NodeKind::Source => node.number("flow").unwrap() / outlets as f64,
                NodeKind::Splitter => {
                    let nozzle = e.source.nozzle.as_deref().unwrap();
                    node.number(&format!("split.{nozzle}")).unwrap() * into
                }
                _ => into / outlets as f64,
            };
            change = change.max((value - flow[&e.tag]).abs());
            next.insert(e.tag.clone(), value);
        }
        flow = next;
        if change < tol {
            return Some(flow);
        }
    }
    None
}

/// Node tags reachable from `start` ignoring direction, over all edges.
pub fn weak_component(g: &ProcessGraph, start: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([start.to_string()]);
    let mut queue = VecDeque::from([start.to_string()]);
    while let Some(u) = queue.pop_front() {
        for e in g.incident_edges(&u) {
            for v in [&e.source.node, &e.target.node] {
                if seen.insert(v.clone()) {
                    queue.push_back(v.clone());
                }
            }
        }
    }
    seen
}

/// One stage of a generated plant; see [`plant`].
#[derive(Debug, Clone)]
pub enum Unit {
    /// Pump, valve, heat exchanger, tank or instrument, by index.
    PassThrough(usize),
    /// Splitter sending `fraction` to a new sink.
    SideDraw(f64),
    /// Mixer taking a second source of the given flow.
    SideFeed(f64),
    /// Mixer, tank and splitter returning `fraction` to the mixer.
    Recycle(f64),
}

pub fn unit() -> impl Strategy<Value = Unit> {
    prop_oneof![
        (0usize..5).prop_map(Unit::PassThrough),
        (0.05f64..0.95).prop_map(Unit::SideDraw),
        (0.1f64..1000.0).prop_map(Unit::SideFeed),
        (0.05f64..0.95).prop_map(Unit::Recycle),
    ]
}

/// Source-to-sink train of random units: always well posed.
pub fn plant_spec(max_units: usize) -> impl Strategy<Value = (f64, Vec<Unit>)> {
    (0.1f64..1000.0, prop::collection::vec(unit(), 0..=max_units))
}

pub fn plant(feed: f64, units: &[Unit]) -> ProcessGraph {
    const PASS: [NodeKind; 5] = [
        NodeKind::Pump,
        NodeKind::Valve,
        NodeKind::HeatExchanger,
        NodeKind::Tank,
        NodeKind::Instrument,
    ];
    let mut g = ProcessGraph::default();
    let mut pipes = 0;
    let mut pipe = |g: &mut ProcessGraph, from: (&str, &str), to: (&str, &str)| {
        pipes += 1;
        g.add_edge(Edge::pipe(
            format!("E{pipes:03}"),
            Endpoint::port(from.0, from.1),
            Endpoint::port(to.0, to.1),
        ))
        .unwrap();
    };
    g.add_node(Node::new("S0", NodeKind::Source).with_attr("flow", feed)).unwrap();
    let mut at = ("S0".to_string(), "out1".to_string());
    for (i, u) in units.iter().enumerate() {
        match u {
            Unit::PassThrough(k) => {
                let t = format!("U{i}");
                g.add_node(Node::new(&t, PASS[*k].clone())).unwrap();
                pipe(&mut g, (&at.0, &at.1), (&t, "in1"));
                at = (t, "out1".into());
            }
            Unit::SideDraw(f) => {
                let (sp, k) = (format!("D{i}"), format!("K{i}"));
                g.add_node(
                    Node::new(&sp, NodeKind::Splitter)
                        .with_attr("split.out1", *f)
                        .with_attr("split.out2", 1.0 - f),
                )
                .unwrap();
                g.add_node(Node::new(&k, NodeKind::Sink)).unwrap();
                pipe(&mut g, (&at.0, &at.1), (&sp, "in1"));
                pipe(&mut g, (&sp, "out1"), (&k, "in1"));
                at = (sp, "out2".into());
            }
            Unit::SideFeed(q) => {
                let (m, s) = (format!("F{i}"), format!("Q{i}"));
                g.add_node(Node::new(&m, NodeKind::Mixer)).unwrap();
                g.add_node(Node::new(&s, NodeKind::Source).with_attr("flow", *q)).unwrap();
                pipe(&mut g, (&at.0, &at.1), (&m, "in1"));
                pipe(&mut g, (&s, "out1"), (&m, "in2"));
                at = (m, "out1".into());
            }
            Unit::Recycle(r) => {
                let (m, t, sp) = (format!("M{i}"), format!("R{i}"), format!("Y{i}"));
                g.add_node(Node::new(&m, NodeKind::Mixer)).unwrap();
                g.add_node(Node::new(&t, NodeKind::Tank)).unwrap();
                g.add_node(
                    Node::new(&sp, NodeKind::Splitter)
                        .with_attr("split.out1", *r)
                        .with_attr("split.out2", 1.0 - r),
                )
                .unwrap();
                pipe(&mut g, (&at.0, &at.1), (&m, "in1"));
                pipe(&mut g, (&m, "out1"), (&t, "in1"));
                pipe(&mut g, (&t, "out1"), (&sp, "in1"));
                pipe(&mut g, (&sp, "out1"), (&m, "in2"));
                at = (sp, "out2".into());
            }
        }
    }
    g.add_node(Node::new("Z", NodeKind::Sink)).unwrap();
    pipe(&mut g, (&at.0, &at.1), ("Z", "in1"));
    g
}
