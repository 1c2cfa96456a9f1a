use std::fmt::Write;

use crate::graph::{EdgeKind, ProcessGraph};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz digraph: one statement per node labelled `tag\nkind`, pipes
/// solid and signals dashed, both in tag order.
pub fn to_dot(graph: &ProcessGraph) -> String {
    let name = graph.meta().get("source").map_or("process", String::as_str);
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box];\n");
    for node in graph.nodes() {
        // `\n` inside a DOT label is a line break; it is written literally.
        let label = format!("{}\\n{}", escape_label(&node.tag), escape_label(&node.kind.to_string()));
        writeln!(out, "  {} [label=\"{}\"];", quote(&node.tag), label).unwrap();
    }
    for edge in graph.edges() {
        let style = match edge.kind {
            EdgeKind::ProcessFlow => "solid",
            EdgeKind::Signal => "dashed",
        };
        writeln!(
            out,
            "  {} -> {} [label={}, style={}];",
            quote(&edge.source.node),
            quote(&edge.target.node),
            quote(&edge.tag),
            style
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn escape_label(s: &str) -> String {
    let quoted = quote(s);
    quoted[1..quoted.len() - 1].to_string()
}
