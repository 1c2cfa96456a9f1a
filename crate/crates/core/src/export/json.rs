use serde_json::{Map, Value};

use crate::graph::{Attrs, Edge, Endpoint, Frame, Node, ProcessGraph};
use crate::ingest::FORMAT_VERSION;

/// Writes `value` compactly with object keys sorted at every level.
/// Numbers use the shortest decimal that reads back to the same `f64`.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match n.as_f64() {
            Some(v) if n.is_f64() && v.fract() == 0.0 && v.abs() < 1e15 && !(v == 0.0 && v.is_sign_negative()) => {
                out.push_str(&(v as i64).to_string())
            }
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings always serialize")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// Canonical GraphJSON.
pub fn to_json(graph: &ProcessGraph) -> String {
    to_canonical_json(&graph_to_value(graph))
}

pub(crate) fn graph_to_value(graph: &ProcessGraph) -> Value {
    let mut root = Map::new();
    root.insert("format_version".into(), FORMAT_VERSION.into());
    root.insert(
        "meta".into(),
        Value::Object(
            graph
                .meta()
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        ),
    );
    root.insert("nodes".into(), graph.nodes().map(node_to_value).collect());
    root.insert("edges".into(), graph.edges().map(edge_to_value).collect());
    Value::Object(root)
}

pub(crate) fn attrs_to_value(attrs: &Attrs) -> Value {
    Value::Object(attrs.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub(crate) fn node_to_value(node: &Node) -> Value {
    let mut obj = Map::new();
    obj.insert("tag".into(), node.tag.clone().into());
    obj.insert("kind".into(), node.kind.to_string().into());
    if let Some(p) = &node.position {
        let mut pos = Map::new();
        let frame = match p.frame {
            Frame::Document => "document",
            Frame::Plant => "plant",
        };
        pos.insert("frame".into(), frame.into());
        pos.insert("x".into(), number(p.x));
        pos.insert("y".into(), number(p.y));
        if let Some(z) = p.z {
            pos.insert("z".into(), number(z));
        }
        obj.insert("position".into(), Value::Object(pos));
    }
    let nozzles = node
        .nozzles
        .iter()
        .map(|n| {
            let mut m = Map::new();
            m.insert("id".into(), n.id.clone().into());
            m.insert("direction".into(), n.direction.name().into());
            m.insert("ordinal".into(), n.ordinal.into());
            Value::Object(m)
        })
        .collect();
    obj.insert("nozzles".into(), nozzles);
    obj.insert("attrs".into(), attrs_to_value(&node.attrs));
    Value::Object(obj)
}

fn endpoint_to_value(end: &Endpoint) -> Value {
    let mut obj = Map::new();
    obj.insert("node".into(), end.node.clone().into());
    if let Some(nozzle) = &end.nozzle {
        obj.insert("nozzle".into(), nozzle.clone().into());
    }
    Value::Object(obj)
}

pub(crate) fn edge_to_value(edge: &Edge) -> Value {
    let mut obj = Map::new();
    obj.insert("tag".into(), edge.tag.clone().into());
    obj.insert("kind".into(), edge.kind.name().into());
    obj.insert("source".into(), endpoint_to_value(&edge.source));
    obj.insert("target".into(), endpoint_to_value(&edge.target));
    obj.insert("attrs".into(), attrs_to_value(&edge.attrs));
    Value::Object(obj)
}
