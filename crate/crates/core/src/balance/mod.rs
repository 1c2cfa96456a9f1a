//! Steady-state volumetric flow balance over the process edges.
//!
//! One unknown per pipe. Sources fix their outflow, splitters fix the share
//! of each outlet, and every other node with pipes conserves flow. Sinks and
//! splitters get no conservation row. Signal edges are ignored.

mod solve;

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::graph::{Direction, EdgeKind, NodeKind, ProcessGraph, SPLIT_PREFIX};

pub use solve::{solve_steady_state, solve_system, CapacityWarning, FlowSolution, PIVOT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EquationKind {
    SourceSpec,
    SplitterRatio,
    Conservation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub node: String,
    pub equation: EquationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefficients: BTreeMap<String, f64>,
    pub rhs: f64,
    pub origin: Origin,
}

impl Row {
    /// `Σ coeff·flow − rhs`.
    pub fn residual(&self, flows: &BTreeMap<String, f64>) -> f64 {
        self.coefficients.iter().map(|(e, c)| c * flows[e]).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// Pipe tags in tag order.
    pub unknowns: Vec<String>,
    pub rows: Vec<Row>,
}

impl LinearSystem {
    pub fn rows_of(&self, kind: EquationKind) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.origin.equation == kind)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BalanceError {
    #[error("no source with a flow specification in the component containing {}", .component.join(", "))]
    MissingBoundaryCondition { component: Vec<String> },
    #[error("splitter '{tag}' has no usable fraction for outlet '{nozzle}'")]
    MissingFraction { tag: String, nozzle: String },
    #[error("flows of {} are not determined", .free_edges.join(", "))]
    Underdetermined { free_edges: Vec<String> },
    #[error("equations are inconsistent: residual {residual} exceeds {threshold}")]
    Inconsistent { residual: f64, threshold: f64 },
    #[error("negative flow {value} on '{edge}'")]
    NegativeFlow { edge: String, value: f64 },
}

/// Transcribes the balance equations of `graph`.
pub fn build_equations(graph: &ProcessGraph) -> Result<LinearSystem, BalanceError> {
    check_boundaries(graph)?;
    let unknowns: Vec<String> = graph.edges_of_kind(EdgeKind::ProcessFlow).map(|e| e.tag.clone()).collect();

    // Pipes per node and direction, in pipe-tag order.
    let mut inflow: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut outflow: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in graph.edges_of_kind(EdgeKind::ProcessFlow) {
        outflow.entry(e.source.node.as_str()).or_default().push(&e.tag);
        inflow.entry(e.target.node.as_str()).or_default().push(&e.tag);
    }
    let sum = |pipes: Option<&Vec<&str>>, sign: f64, into: &mut BTreeMap<String, f64>| {
        for p in pipes.into_iter().flatten() {
            *into.entry(p.to_string()).or_default() += sign;
        }
    };

    let mut rows = Vec::new();
    for node in graph.nodes() {
        let tag = node.tag.as_str();
        if !inflow.contains_key(tag) && !outflow.contains_key(tag) {
            continue;
        }
        let row = |coefficients, rhs, equation| Row {
            coefficients,
            rhs,
            origin: Origin {
                node: tag.to_string(),
                equation,
            },
        };
        match node.kind {
            NodeKind::Source => {
                if let Some(flow) = node.number("flow") {
                    let mut c = BTreeMap::new();
                    sum(outflow.get(tag), 1.0, &mut c);
                    rows.push(row(c, flow, EquationKind::SourceSpec));
                }
            }
            NodeKind::Sink => {}
            NodeKind::Splitter => {
                for nozzle in node.nozzles_in(Direction::Outlet) {
                    let Some(pipe) = graph.pipe_at(tag, &nozzle.id) else { continue };
                    let fraction = node
                        .number(&format!("{SPLIT_PREFIX}{}", nozzle.id))
                        .filter(|f| f.is_finite())
                        .ok_or_else(|| BalanceError::MissingFraction {
                            tag: tag.to_string(),
                            nozzle: nozzle.id.clone(),
                        })?;
                    let mut c = BTreeMap::new();
                    sum(inflow.get(tag), -fraction, &mut c);
                    *c.entry(pipe.tag.clone()).or_default() += 1.0;
                    rows.push(row(c, 0.0, EquationKind::SplitterRatio));
                }
            }
            _ => {
                let mut c = BTreeMap::new();
                sum(inflow.get(tag), 1.0, &mut c);
                sum(outflow.get(tag), -1.0, &mut c);
                rows.push(row(c, 0.0, EquationKind::Conservation));
            }
        }
    }
    Ok(LinearSystem { unknowns, rows })
}

/// Every process component with pipes needs a source carrying `flow`.
fn check_boundaries(graph: &ProcessGraph) -> Result<(), BalanceError> {
    let tags: Vec<&str> = graph.nodes().map(|n| n.tag.as_str()).collect();
    let index: BTreeMap<&str, usize> = tags.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut uf = UnionFind::<usize>::new(tags.len());
    let mut has_pipe = vec![false; tags.len()];
    for e in graph.edges_of_kind(EdgeKind::ProcessFlow) {
        let (a, b) = (index[e.source.node.as_str()], index[e.target.node.as_str()]);
        uf.union(a, b);
        has_pipe[a] = true;
        has_pipe[b] = true;
    }
    let mut specified = vec![false; tags.len()];
    for node in graph.nodes() {
        if node.kind == NodeKind::Source && node.number("flow").is_some() {
            specified[uf.find(index[node.tag.as_str()])] = true;
        }
    }
    let mut missing: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, tag) in tags.iter().enumerate() {
        let root = uf.find(i);
        if has_pipe[i] && !specified[root] {
            missing.entry(root).or_default().push(tag.to_string());
        }
    }
    match missing.into_values().min() {
        Some(component) => Err(BalanceError::MissingBoundaryCondition { component }),
        None => Ok(()),
    }
}
