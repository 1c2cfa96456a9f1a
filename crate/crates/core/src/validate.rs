//! Structural consistency checks producing a findings report.
//!
//! | id | check |
//! |----|-------|
//! | C1 | every process component has a source and a sink |
//! | C2 | nozzle counts per kind |
//! | C3 | unconnected nozzles and isolated nodes |
//! | C4 | attributes required by the fidelity profile |
//! | C5 | splitter fractions |
//! | C6 | recycle and control loops |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::graph::{AttrValue, Direction, EdgeKind, Node, NodeKind, ProcessGraph, SPLIT_PREFIX};
use crate::transform::FidelityProfile;

/// Tolerance on the sum of a splitter's fractions.
pub const SPLIT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CheckId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl CheckId {
    pub const ALL: [CheckId; 6] = [CheckId::C1, CheckId::C2, CheckId::C3, CheckId::C4, CheckId::C5, CheckId::C6];
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub check_id: CheckId,
    pub severity: Severity,
    /// A node or edge tag, or `graph`.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.check_id, self.severity, self.subject, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub passed: bool,
}

impl ValidationReport {
    fn new(mut findings: Vec<Finding>) -> Self {
        findings.sort_by(|a, b| {
            (a.check_id, &a.subject, &a.message, a.severity).cmp(&(b.check_id, &b.subject, &b.message, b.severity))
        });
        let passed = !findings.iter().any(|f| f.severity == Severity::Error);
        Self { findings, passed }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn of_check(&self, id: CheckId) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.check_id == id)
    }

    /// `{"findings":[...],"passed":bool}`, canonical.
    pub fn to_json(&self) -> String {
        crate::export::to_canonical_json(&serde_json::to_value(self).expect("report serializes"))
    }
}

/// Runs every check. Never fails; problems become findings.
pub fn validate(graph: &ProcessGraph, profile: &FidelityProfile) -> ValidationReport {
    let view = View::new(graph);
    let mut findings = Vec::new();
    check_connectivity(&view, &mut findings);
    check_cardinality(&view, &mut findings);
    check_dangling(&view, &mut findings);
    check_attributes(graph, profile, &mut findings);
    check_splitters(&view, &mut findings);
    check_cycles(&view, &mut findings);
    ValidationReport::new(findings)
}

fn finding(check_id: CheckId, severity: Severity, subject: &str, message: String) -> Finding {
    Finding {
        check_id,
        severity,
        subject: subject.to_string(),
        message,
    }
}

/// Index-based view of the graph shared by the checks.
struct View<'g> {
    graph: &'g ProcessGraph,
    nodes: Vec<&'g Node>,
    index: BTreeMap<&'g str, usize>,
    /// Number of edges of any kind touching each node.
    degree: Vec<usize>,
}

impl<'g> View<'g> {
    fn new(graph: &'g ProcessGraph) -> Self {
        let nodes: Vec<&Node> = graph.nodes().collect();
        let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.tag.as_str(), i)).collect();
        let mut degree = vec![0; nodes.len()];
        for e in graph.edges() {
            degree[index[e.source.node.as_str()]] += 1;
            degree[index[e.target.node.as_str()]] += 1;
        }
        Self {
            graph,
            nodes,
            index,
            degree,
        }
    }

    fn digraph(&self, kind: EdgeKind) -> DiGraph<usize, ()> {
        let mut g = DiGraph::with_capacity(self.nodes.len(), 0);
        for i in 0..self.nodes.len() {
            g.add_node(i);
        }
        for e in self.graph.edges_of_kind(kind) {
            g.add_edge(
                NodeIndex::new(self.index[e.source.node.as_str()]),
                NodeIndex::new(self.index[e.target.node.as_str()]),
                (),
            );
        }
        g
    }

    fn connected(&self, node: &Node, nozzle: &str) -> bool {
        self.graph.pipe_at(&node.tag, nozzle).is_some()
    }
}

fn check_connectivity(view: &View<'_>, out: &mut Vec<Finding>) {
    let mut uf = UnionFind::<usize>::new(view.nodes.len());
    for e in view.graph.edges() {
        uf.union(view.index[e.source.node.as_str()], view.index[e.target.node.as_str()]);
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..view.nodes.len() {
        components.entry(uf.find(i)).or_default().push(i);
    }
    for members in components.values() {
        let kinds: Vec<&NodeKind> = members.iter().map(|&i| &view.nodes[i].kind).collect();
        if kinds.iter().all(|k| **k == NodeKind::Controller) {
            continue;
        }
        let has_source = kinds.contains(&&NodeKind::Source);
        let has_sink = kinds.contains(&&NodeKind::Sink);
        if has_source && has_sink {
            continue;
        }
        let missing = match (has_source, has_sink) {
            (false, false) => "a source and a sink",
            (false, true) => "a source",
            _ => "a sink",
        };
        // Members are in tag order, so the first is the smallest tag.
        let tags: Vec<&str> = members.iter().map(|&i| view.nodes[i].tag.as_str()).collect();
        out.push(finding(
            CheckId::C1,
            Severity::Error,
            tags[0],
            format!("component {{{}}} has no {missing}", tags.join(", ")),
        ));
    }
}

/// Allowed (inlets, outlets) per kind as inclusive ranges; `None` is exempt.
pub fn nozzle_bounds(kind: &NodeKind) -> Option<((u32, u32), (u32, u32))> {
    const MANY: u32 = u32::MAX;
    Some(match kind {
        NodeKind::Source => ((0, 0), (1, 1)),
        NodeKind::Sink => ((1, 1), (0, 0)),
        NodeKind::Pump | NodeKind::Valve | NodeKind::Instrument | NodeKind::Stream => ((1, 1), (1, 1)),
        NodeKind::Tank | NodeKind::HeatExchanger => ((1, MANY), (1, MANY)),
        NodeKind::Mixer => ((2, MANY), (1, 1)),
        NodeKind::Splitter => ((1, 1), (2, MANY)),
        NodeKind::Controller => ((0, 0), (0, 0)),
        NodeKind::Other(_) => return None,
    })
}

fn describe((lo, hi): (u32, u32)) -> String {
    match (lo, hi) {
        (lo, hi) if lo == hi => lo.to_string(),
        (lo, u32::MAX) => format!(">={lo}"),
        (lo, hi) => format!("{lo}..{hi}"),
    }
}

fn within(n: u32, (lo, hi): (u32, u32)) -> bool {
    lo <= n && n <= hi
}

fn check_cardinality(view: &View<'_>, out: &mut Vec<Finding>) {
    for node in &view.nodes {
        let Some((ins, outs)) = nozzle_bounds(&node.kind) else {
            out.push(finding(
                CheckId::C2,
                Severity::Info,
                &node.tag,
                format!("kind {} is exempt from nozzle checks", node.kind),
            ));
            continue;
        };
        let count = |dir: Direction, connected_only: bool| {
            node.nozzles_in(dir)
                .filter(|n| !connected_only || view.connected(node, &n.id))
                .count() as u32
        };
        let (di, dout) = (count(Direction::Inlet, false), count(Direction::Outlet, false));
        if !within(di, ins) || !within(dout, outs) {
            out.push(finding(
                CheckId::C2,
                Severity::Error,
                &node.tag,
                format!(
                    "{} declares {di} inlets and {dout} outlets; expected {} and {}",
                    node.kind,
                    describe(ins),
                    describe(outs)
                ),
            ));
            continue;
        }
        // Isolated nodes are reported once, by C3.
        if view.degree[view.index[node.tag.as_str()]] == 0 {
            continue;
        }
        let (ci, co) = (count(Direction::Inlet, true), count(Direction::Outlet, true));
        if ci < ins.0 || co < outs.0 {
            out.push(finding(
                CheckId::C2,
                Severity::Warning,
                &node.tag,
                format!(
                    "{} has {ci} connected inlets and {co} connected outlets; expected {} and {}",
                    node.kind,
                    describe(ins),
                    describe(outs)
                ),
            ));
        }
    }
}

fn check_dangling(view: &View<'_>, out: &mut Vec<Finding>) {
    for node in &view.nodes {
        if view.degree[view.index[node.tag.as_str()]] == 0 {
            out.push(finding(CheckId::C3, Severity::Warning, &node.tag, "node has no edges".into()));
            continue;
        }
        if node.kind.is_other() {
            continue;
        }
        for nozzle in &node.nozzles {
            if !view.connected(node, &nozzle.id) {
                out.push(finding(
                    CheckId::C3,
                    Severity::Warning,
                    &node.tag,
                    format!("{} nozzle '{}' is not connected", nozzle.direction.name(), nozzle.id),
                ));
            }
        }
    }
}

fn check_attributes(graph: &ProcessGraph, profile: &FidelityProfile, out: &mut Vec<Finding>) {
    for node in graph.nodes() {
        for key in profile.required_for(&node.kind) {
            match node.attrs.get(key) {
                None => out.push(finding(
                    CheckId::C4,
                    Severity::Error,
                    &node.tag,
                    format!("missing attribute '{key}' required by profile '{}'", profile.name),
                )),
                Some(AttrValue::Number(v)) if *v <= 0.0 => out.push(finding(
                    CheckId::C4,
                    Severity::Error,
                    &node.tag,
                    format!("attribute '{key}' must be positive, got {v}"),
                )),
                Some(_) => {}
            }
        }
    }
}

fn check_splitters(view: &View<'_>, out: &mut Vec<Finding>) {
    for node in view.nodes.iter().filter(|n| n.kind == NodeKind::Splitter) {
        let outlets: BTreeSet<&str> = node.nozzles_in(Direction::Outlet).map(|n| n.id.as_str()).collect();
        let mut sum = 0.0;
        let mut complete = true;
        for id in &outlets {
            match node.number(&format!("{SPLIT_PREFIX}{id}")) {
                None => {
                    complete = false;
                    out.push(finding(
                        CheckId::C5,
                        Severity::Error,
                        &node.tag,
                        format!("no fraction {SPLIT_PREFIX}{id} for outlet '{id}'"),
                    ));
                }
                Some(f) if f < 0.0 => {
                    complete = false;
                    out.push(finding(
                        CheckId::C5,
                        Severity::Error,
                        &node.tag,
                        format!("fraction {SPLIT_PREFIX}{id} is negative ({f})"),
                    ));
                }
                Some(f) => sum += f,
            }
        }
        if complete && (sum - 1.0).abs() > SPLIT_SUM_TOLERANCE {
            out.push(finding(
                CheckId::C5,
                Severity::Error,
                &node.tag,
                format!("fractions sum to {sum}, not 1"),
            ));
        }
        for key in node.attrs.keys() {
            if let Some(id) = key.strip_prefix(SPLIT_PREFIX) {
                if !outlets.contains(id) {
                    out.push(finding(
                        CheckId::C5,
                        Severity::Warning,
                        &node.tag,
                        format!("fraction {key} names no outlet"),
                    ));
                }
            }
        }
    }
}

fn check_cycles(view: &View<'_>, out: &mut Vec<Finding>) {
    for (kind, label) in [(EdgeKind::ProcessFlow, "recycle loop"), (EdgeKind::Signal, "control loop")] {
        let g = view.digraph(kind);
        for scc in tarjan_scc(&g) {
            let cyclic = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            if !cyclic {
                continue;
            }
            let mut tags: Vec<&str> = scc.iter().map(|i| view.nodes[g[*i]].tag.as_str()).collect();
            tags.sort_unstable();
            out.push(finding(CheckId::C6, Severity::Info, tags[0], format!("{label}: {}", tags.join(", "))));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Endpoint, Nozzle};

    fn splitter_plant(fractions: (f64, f64)) -> ProcessGraph {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source).with_attr("flow", 10.0)).unwrap();
        g.add_node(Node::new("P1", NodeKind::Pump).with_attr("max_flow", 12.0)).unwrap();
        g.add_node(
            Node::new("SP1", NodeKind::Splitter)
                .with_attr("split.out1", fractions.0)
                .with_attr("split.out2", fractions.1),
        )
        .unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_node(Node::new("K2", NodeKind::Sink)).unwrap();
        let pipe = |t: &str, a: &str, o: &str, b: &str, i: &str| Edge::pipe(t, Endpoint::port(a, o), Endpoint::port(b, i));
        g.add_edge(pipe("E1", "S1", "out1", "P1", "in1")).unwrap();
        g.add_edge(pipe("E2", "P1", "out1", "SP1", "in1")).unwrap();
        g.add_edge(pipe("E3", "SP1", "out1", "K1", "in1")).unwrap();
        g.add_edge(pipe("E4", "SP1", "out2", "K2", "in1")).unwrap();
        g
    }

    #[test]
    fn clean_plant_passes() {
        let report = validate(&splitter_plant((0.25, 0.75)), &FidelityProfile::steady_state());
        assert!(report.passed);
        assert!(report.findings.is_empty(), "{:?}", report.findings);
    }

    #[test]
    fn missing_required_attr() {
        let mut g = splitter_plant((0.25, 0.75));
        let mut p1 = g.node("P1").unwrap().clone();
        p1.attrs.clear();
        g.replace_node(p1).unwrap();
        let report = validate(&g, &FidelityProfile::steady_state());
        let errors: Vec<_> = report.errors().collect();
        assert_eq!(errors.len(), 1);
        assert_eq!((errors[0].check_id, errors[0].subject.as_str()), (CheckId::C4, "P1"));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let report = validate(&splitter_plant((0.5, 0.6)), &FidelityProfile::steady_state());
        let errors: Vec<_> = report.errors().collect();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].check_id, CheckId::C5);
        assert!(errors[0].message.contains("1.1"));
    }

    #[test]
    fn isolated_component_and_dangling() {
        let mut g = splitter_plant((0.25, 0.75));
        g.add_node(Node::new("T9", NodeKind::Tank)).unwrap();
        let report = validate(&g, &FidelityProfile::steady_state());
        let ids: Vec<_> = report.findings.iter().map(|f| (f.check_id, f.severity, f.subject.as_str())).collect();
        assert_eq!(
            ids,
            vec![(CheckId::C1, Severity::Error, "T9"), (CheckId::C3, Severity::Warning, "T9")]
        );
    }

    #[test]
    fn bad_declared_cardinality() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("M1", NodeKind::Mixer).with_nozzles(Nozzle::numbered(1, 1))).unwrap();
        let report = validate(&g, &FidelityProfile::steady_state());
        assert!(report.of_check(CheckId::C2).any(|f| f.severity == Severity::Error));
    }

    #[test]
    fn signal_only_controller_is_fine() {
        let mut g = splitter_plant((0.25, 0.75));
        g.add_node(Node::new("C1", NodeKind::Controller)).unwrap();
        g.add_edge(Edge::signal("X1", "P1", "C1")).unwrap();
        let report = validate(&g, &FidelityProfile::dynamic());
        assert!(report.passed, "{:?}", report.findings);
    }

    #[test]
    fn control_loop_is_info() {
        let mut g = splitter_plant((0.25, 0.75));
        g.add_node(Node::new("C1", NodeKind::Controller)).unwrap();
        g.add_edge(Edge::signal("X1", "P1", "C1")).unwrap();
        g.add_edge(Edge::signal("X2", "C1", "P1")).unwrap();
        let report = validate(&g, &FidelityProfile::dynamic());
        let loops: Vec<_> = report.of_check(CheckId::C6).collect();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].message, "control loop: C1, P1");
        assert!(report.passed);
    }

    #[test]
    fn report_json_shape() {
        let mut g = splitter_plant((0.25, 0.75));
        g.add_node(Node::new("T9", NodeKind::Tank)).unwrap();
        let json = validate(&g, &FidelityProfile::steady_state()).to_json();
        assert!(json.starts_with(r#"{"findings":[{"check_id":"C1","message":"#));
        assert!(json.ends_with(r#""passed":false}"#));
    }
}
