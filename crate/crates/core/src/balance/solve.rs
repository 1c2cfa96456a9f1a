use std::collections::BTreeMap;

use serde::Serialize;

use super::{build_equations, BalanceError, LinearSystem};
use crate::graph::{EdgeKind, NodeKind, ProcessGraph};

/// Relative pivot threshold: entries below `PIVOT_THRESHOLD · max(1, max|a|)`
/// count as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-12;
/// Relative consistency threshold on the largest row residual.
pub const CONSISTENCY_THRESHOLD: f64 = 1e-6;
/// Flows below `-NEGATIVE_TOLERANCE` are rejected.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityWarning {
    pub node: String,
    pub flow: f64,
    pub max_flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSolution {
    /// Volumetric flow per pipe, m³/h.
    pub flows: BTreeMap<String, f64>,
    pub max_residual: f64,
    pub capacity_warnings: Vec<CapacityWarning>,
}

impl FlowSolution {
    /// `{"capacity_warnings":[...],"flows":{...},"max_residual":x}`, canonical.
    pub fn to_json(&self) -> String {
        crate::export::to_canonical_json(&serde_json::to_value(self).expect("solution serializes"))
    }
}

/// Solves `system` by Gauss-Jordan elimination with partial pivoting.
/// Extra rows are allowed; they must be consistent with the rest.
/// Returns the flows and the largest absolute row residual.
pub fn solve_system(system: &LinearSystem, rhs_scale: f64) -> Result<(BTreeMap<String, f64>, f64), BalanceError> {
    let n = system.unknowns.len();
    let column: BTreeMap<&str, usize> = system.unknowns.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let mut a: Vec<Vec<f64>> = system
        .rows
        .iter()
        .map(|row| {
            let mut dense = vec![0.0; n + 1];
            for (edge, c) in &row.coefficients {
                dense[column[edge.as_str()]] += c;
            }
            dense[n] = row.rhs;
            dense
        })
        .collect();
    let largest = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = PIVOT_THRESHOLD * largest.max(1.0);

    let m = a.len();
    let mut pivots = Vec::with_capacity(n);
    let mut free = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let best = (rank..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()));
        let Some(p) = best.filter(|&p| a[p][col].abs() > eps) else {
            free.push(system.unknowns[col].clone());
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][col];
        for v in &mut a[rank][col..] {
            *v /= pivot;
        }
        for r in 0..m {
            if r == rank || a[r][col] == 0.0 {
                continue;
            }
            let factor = a[r][col];
            let (pivot_row, row) = if r < rank {
                let (lo, hi) = a.split_at_mut(rank);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = a.split_at_mut(r);
                (&lo[rank], &mut hi[0])
            };
            for k in col..=n {
                row[k] -= factor * pivot_row[k];
            }
            row[col] = 0.0;
        }
        pivots.push((rank, col));
        rank += 1;
    }
    if !free.is_empty() {
        return Err(BalanceError::Underdetermined { free_edges: free });
    }

    let mut flows = BTreeMap::new();
    for &(r, col) in &pivots {
        flows.insert(system.unknowns[col].clone(), a[r][n]);
    }
    let max_residual = system
        .rows
        .iter()
        .map(|row| row.residual(&flows).abs())
        .fold(0.0, f64::max);
    let threshold = CONSISTENCY_THRESHOLD * rhs_scale.max(1.0);
    if max_residual > threshold {
        return Err(BalanceError::Inconsistent {
            residual: max_residual,
            threshold,
        });
    }
    Ok((flows, max_residual))
}

/// Builds and solves the balance of `graph`, then checks pump capacities.
pub fn solve_steady_state(graph: &ProcessGraph) -> Result<FlowSolution, BalanceError> {
    let system = build_equations(graph)?;
    let largest_source = graph
        .nodes()
        .filter(|n| n.kind == NodeKind::Source)
        .filter_map(|n| n.number("flow"))
        .fold(0.0f64, |m, f| m.max(f.abs()));
    let (mut flows, max_residual) = solve_system(&system, largest_source)?;

    if let Some((edge, &value)) = flows.iter().find(|(_, v)| **v < -NEGATIVE_TOLERANCE) {
        return Err(BalanceError::NegativeFlow {
            edge: edge.clone(),
            value,
        });
    }
    // No negative zeros in the output.
    for v in flows.values_mut() {
        if *v == 0.0 {
            *v = 0.0;
        }
    }

    let mut through: BTreeMap<&str, f64> = BTreeMap::new();
    for e in graph.edges_of_kind(EdgeKind::ProcessFlow) {
        *through.entry(e.target.node.as_str()).or_default() += flows[&e.tag];
    }
    let capacity_warnings = graph
        .nodes()
        .filter(|n| n.kind == NodeKind::Pump)
        .filter_map(|n| {
            let max_flow = n.number("max_flow")?;
            let flow = through.get(n.tag.as_str()).copied().unwrap_or(0.0);
            (flow - max_flow > NEGATIVE_TOLERANCE * max_flow.abs().max(1.0)).then(|| CapacityWarning {
                node: n.tag.clone(),
                flow,
                max_flow,
            })
        })
        .collect();

    Ok(FlowSolution {
        flows,
        max_residual,
        capacity_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{EquationKind, Origin, Row};
    use crate::graph::{Edge, Endpoint, Node, Nozzle};

    fn pipe(tag: &str, a: &str, o: &str, b: &str, i: &str) -> Edge {
        Edge::pipe(tag, Endpoint::port(a, o), Endpoint::port(b, i))
    }

    #[test]
    fn chain_flows_are_equal() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source).with_attr("flow", 10.0)).unwrap();
        g.add_node(Node::new("P1", NodeKind::Pump)).unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_edge(pipe("E1", "S1", "out1", "P1", "in1")).unwrap();
        g.add_edge(pipe("E2", "P1", "out1", "K1", "in1")).unwrap();
        let sol = solve_steady_state(&g).unwrap();
        assert_eq!(sol.flows["E1"], 10.0);
        assert_eq!(sol.flows["E2"], 10.0);
        assert!(sol.max_residual <= 1e-9);
        assert!(sol.capacity_warnings.is_empty());
    }

    #[test]
    fn two_branches_without_fractions_are_free() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source).with_attr("flow", 10.0)).unwrap();
        g.add_node(Node::new("T1", NodeKind::Tank).with_nozzles(Nozzle::numbered(1, 2))).unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_node(Node::new("K2", NodeKind::Sink)).unwrap();
        g.add_edge(pipe("E1", "S1", "out1", "T1", "in1")).unwrap();
        g.add_edge(pipe("E2", "T1", "out1", "K1", "in1")).unwrap();
        g.add_edge(pipe("E3", "T1", "out2", "K2", "in1")).unwrap();
        assert_eq!(
            solve_steady_state(&g).unwrap_err(),
            BalanceError::Underdetermined {
                free_edges: vec!["E3".into()]
            }
        );
    }

    #[test]
    fn inconsistent_rows() {
        let origin = || Origin {
            node: "X".into(),
            equation: EquationKind::SourceSpec,
        };
        let sys = LinearSystem {
            unknowns: vec!["a".into()],
            rows: vec![
                Row {
                    coefficients: BTreeMap::from([("a".into(), 1.0)]),
                    rhs: 1.0,
                    origin: origin(),
                },
                Row {
                    coefficients: BTreeMap::from([("a".into(), 1.0)]),
                    rhs: 2.0,
                    origin: origin(),
                },
            ],
        };
        assert!(matches!(solve_system(&sys, 2.0), Err(BalanceError::Inconsistent { .. })));
    }

    #[test]
    fn negative_flow_rejected() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source).with_attr("flow", -1.0)).unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_edge(pipe("E1", "S1", "out1", "K1", "in1")).unwrap();
        assert_eq!(
            solve_steady_state(&g).unwrap_err(),
            BalanceError::NegativeFlow {
                edge: "E1".into(),
                value: -1.0
            }
        );
    }

    #[test]
    fn solution_json() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("S1", NodeKind::Source).with_attr("flow", 2.5)).unwrap();
        g.add_node(Node::new("K1", NodeKind::Sink)).unwrap();
        g.add_edge(pipe("E1", "S1", "out1", "K1", "in1")).unwrap();
        assert_eq!(
            solve_steady_state(&g).unwrap().to_json(),
            r#"{"capacity_warnings":[],"flows":{"E1":2.5},"max_residual":0}"#
        );
    }
}
