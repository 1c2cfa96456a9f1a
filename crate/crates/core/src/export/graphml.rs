use std::collections::BTreeMap;
use std::fmt::Write;

use crate::graph::{AttrValue, Frame, ProcessGraph};

const HEADER: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Domain {
    Graph,
    Node,
    Port,
    Edge,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::Graph => "graph",
            Domain::Node => "node",
            Domain::Port => "port",
            Domain::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KeyType {
    Boolean,
    Int,
    Double,
    String,
}

impl KeyType {
    fn of(value: &AttrValue) -> Self {
        match value {
            AttrValue::Number(_) => KeyType::Double,
            AttrValue::Text(_) => KeyType::String,
            AttrValue::Bool(_) => KeyType::Boolean,
        }
    }

    fn name(self) -> &'static str {
        match self {
            KeyType::Boolean => "boolean",
            KeyType::Int => "int",
            KeyType::Double => "double",
            KeyType::String => "string",
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn number(v: f64) -> String {
    serde_json::Number::from_f64(v).map_or_else(|| v.to_string(), |n| n.to_string())
}

fn render(value: &AttrValue) -> String {
    match value {
        AttrValue::Number(v) => number(*v),
        AttrValue::Text(s) => s.clone(),
        AttrValue::Bool(b) => b.to_string(),
    }
}

/// Key declarations, collected before anything is written so every key is
/// declared exactly once.
#[derive(Default)]
struct Keys {
    types: BTreeMap<(Domain, String), KeyType>,
    ids: BTreeMap<(Domain, String), String>,
}

impl Keys {
    fn declare(&mut self, domain: Domain, name: &str, ty: KeyType) {
        self.types
            .entry((domain, name.to_string()))
            .and_modify(|t| {
                if *t != ty {
                    *t = KeyType::String;
                }
            })
            .or_insert(ty);
    }

    fn assign_ids(&mut self) {
        self.ids = self
            .types
            .keys()
            .enumerate()
            .map(|(i, k)| (k.clone(), format!("d{i}")))
            .collect();
    }

    fn id(&self, domain: Domain, name: &str) -> &str {
        &self.ids[&(domain, name.to_string())]
    }
}

fn collect_keys(graph: &ProcessGraph) -> Keys {
    let mut keys = Keys::default();
    for k in graph.meta().keys() {
        keys.declare(Domain::Graph, k, KeyType::String);
    }
    for node in graph.nodes() {
        keys.declare(Domain::Node, "pid:tag", KeyType::String);
        keys.declare(Domain::Node, "pid:kind", KeyType::String);
        if let Some(p) = &node.position {
            keys.declare(Domain::Node, "pid:frame", KeyType::String);
            keys.declare(Domain::Node, "pid:x", KeyType::Double);
            keys.declare(Domain::Node, "pid:y", KeyType::Double);
            if p.z.is_some() {
                keys.declare(Domain::Node, "pid:z", KeyType::Double);
            }
        }
        if !node.nozzles.is_empty() {
            keys.declare(Domain::Port, "pid:direction", KeyType::String);
            keys.declare(Domain::Port, "pid:ordinal", KeyType::Int);
        }
        for (k, v) in &node.attrs {
            keys.declare(Domain::Node, k, KeyType::of(v));
        }
    }
    for edge in graph.edges() {
        keys.declare(Domain::Edge, "pid:tag", KeyType::String);
        keys.declare(Domain::Edge, "pid:kind", KeyType::String);
        for (k, v) in &edge.attrs {
            keys.declare(Domain::Edge, k, KeyType::of(v));
        }
    }
    keys.assign_ids();
    keys
}

/// GraphML document. Node and edge ids are `n<i>`/`e<i>` in tag order (tags
/// may contain characters GraphML ids do not allow); tags and kinds are
/// carried as `pid:tag`/`pid:kind` data, nozzles as ports.
pub fn to_graphml(graph: &ProcessGraph) -> String {
    let keys = collect_keys(graph);
    let mut out = String::from(HEADER);
    for ((domain, name), ty) in &keys.types {
        writeln!(
            out,
            "  <key id=\"{}\" for=\"{}\" attr.name=\"{}\" attr.type=\"{}\"/>",
            keys.id(*domain, name),
            domain.name(),
            escape(name),
            ty.name()
        )
        .unwrap();
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    let data = |out: &mut String, indent: &str, domain: Domain, name: &str, value: &str| {
        writeln!(
            out,
            "{indent}<data key=\"{}\">{}</data>",
            keys.id(domain, name),
            escape(value)
        )
        .unwrap();
    };
    for (k, v) in graph.meta() {
        data(&mut out, "    ", Domain::Graph, k, v);
    }

    let mut node_ids = BTreeMap::new();
    for (i, node) in graph.nodes().enumerate() {
        let id = format!("n{i}");
        writeln!(out, "    <node id=\"{id}\">").unwrap();
        data(&mut out, "      ", Domain::Node, "pid:tag", &node.tag);
        data(&mut out, "      ", Domain::Node, "pid:kind", &node.kind.to_string());
        if let Some(p) = &node.position {
            let frame = match p.frame {
                Frame::Document => "document",
                Frame::Plant => "plant",
            };
            data(&mut out, "      ", Domain::Node, "pid:frame", frame);
            data(&mut out, "      ", Domain::Node, "pid:x", &number(p.x));
            data(&mut out, "      ", Domain::Node, "pid:y", &number(p.y));
            if let Some(z) = p.z {
                data(&mut out, "      ", Domain::Node, "pid:z", &number(z));
            }
        }
        for (k, v) in &node.attrs {
            data(&mut out, "      ", Domain::Node, k, &render(v));
        }
        for nozzle in &node.nozzles {
            writeln!(out, "      <port name=\"{}\">", escape(&nozzle.id)).unwrap();
            data(&mut out, "        ", Domain::Port, "pid:direction", nozzle.direction.name());
            data(&mut out, "        ", Domain::Port, "pid:ordinal", &nozzle.ordinal.to_string());
            out.push_str("      </port>\n");
        }
        out.push_str("    </node>\n");
        node_ids.insert(node.tag.as_str(), id);
    }

    for (i, edge) in graph.edges().enumerate() {
        write!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\"",
            node_ids[edge.source.node.as_str()],
            node_ids[edge.target.node.as_str()]
        )
        .unwrap();
        if let Some(port) = &edge.source.nozzle {
            write!(out, " sourceport=\"{}\"", escape(port)).unwrap();
        }
        if let Some(port) = &edge.target.nozzle {
            write!(out, " targetport=\"{}\"", escape(port)).unwrap();
        }
        out.push_str(">\n");
        data(&mut out, "      ", Domain::Edge, "pid:tag", &edge.tag);
        data(&mut out, "      ", Domain::Edge, "pid:kind", edge.kind.name());
        for (k, v) in &edge.attrs {
            data(&mut out, "      ", Domain::Edge, k, &render(v));
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Node, NodeKind};

    #[test]
    fn empty_graph_has_no_nodes() {
        let xml = to_graphml(&ProcessGraph::default());
        let doc = roxmltree::Document::parse(&xml).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("node")).count(), 0);
        assert_eq!(doc.root_element().tag_name().name(), "graphml");
    }

    #[test]
    fn tank_volume_is_one_data_element() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("T1", NodeKind::Tank).with_attr("volume", 2.5)).unwrap();
        let xml = to_graphml(&g);
        let doc = roxmltree::Document::parse(&xml).unwrap();
        let key = doc
            .descendants()
            .find(|n| n.has_tag_name("key") && n.attribute("attr.name") == Some("volume"))
            .unwrap();
        assert_eq!(key.attribute("attr.type"), Some("double"));
        let id = key.attribute("id").unwrap();
        let node = doc.descendants().find(|n| n.has_tag_name("node")).unwrap();
        let data: Vec<_> = node
            .children()
            .filter(|c| c.has_tag_name("data") && c.attribute("key") == Some(id))
            .collect();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].text(), Some("2.5"));
    }

    #[test]
    fn mixed_value_types_fall_back_to_string() {
        let mut g = ProcessGraph::default();
        g.add_node(Node::new("A", NodeKind::Tank).with_attr("grade", 3.0)).unwrap();
        g.add_node(Node::new("B", NodeKind::Tank).with_attr("grade", "x&y")).unwrap();
        let xml = to_graphml(&g);
        assert!(xml.contains("attr.name=\"grade\" attr.type=\"string\""));
        assert!(xml.contains(">x&amp;y<"));
        roxmltree::Document::parse(&xml).unwrap();
    }
}
