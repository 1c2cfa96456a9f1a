use serde_json::{Map, Value};

use super::{decode_utf8, IngestError, ParseError, SourceDoc, SourceFormat};
use crate::graph::{
    AttrValue, Attrs, Direction, Edge, EdgeKind, Endpoint, Frame, Node, NodeKind, Nozzle,
    Position, ProcessGraph,
};

pub const FORMAT_VERSION: &str = "1";

/// Reads a GraphJSON document. Unknown keys are rejected at every level.
pub fn parse_graph_json(doc: &SourceDoc) -> Result<ProcessGraph, IngestError> {
    if doc.format != SourceFormat::GraphJson {
        return Err(IngestError::WrongFormat {
            expected: SourceFormat::GraphJson,
            found: doc.format,
        });
    }
    if doc.id.is_empty() {
        return Err(IngestError::EmptyId);
    }
    let text = decode_utf8(&doc.content).map_err(|e| IngestError::Parse(vec![e]))?;
    let root: Value = serde_json::from_str(text).map_err(|e| {
        IngestError::Parse(vec![ParseError {
            line: e.line().max(1),
            column: e.column().max(1),
            message: e.to_string(),
            snippet: text.lines().nth(e.line().saturating_sub(1)).unwrap_or("").trim().to_string(),
        }])
    })?;
    graph_from_value(&root)
}

fn violation(path: &str, message: impl Into<String>) -> IngestError {
    IngestError::SchemaViolation {
        path: if path.is_empty() { "/".into() } else { path.to_string() },
        message: message.into(),
    }
}

fn pointer(base: &str, key: &str) -> String {
    format!("{base}/{}", key.replace('~', "~0").replace('/', "~1"))
}

struct Obj<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, path: String, required: &[&str], optional: &[&str]) -> Result<Self, IngestError> {
        let map = value
            .as_object()
            .ok_or_else(|| violation(&path, "expected an object"))?;
        for key in map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                return Err(violation(&pointer(&path, key), "unknown key"));
            }
        }
        for key in required {
            if !map.contains_key(*key) {
                return Err(violation(&pointer(&path, key), "missing required key"));
            }
        }
        Ok(Self { path, map })
    }

    fn at(&self, key: &str) -> String {
        pointer(&self.path, key)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn str(&self, key: &str) -> Result<&'a str, IngestError> {
        self.map[key]
            .as_str()
            .ok_or_else(|| violation(&self.at(key), "expected a string"))
    }

    fn array(&self, key: &str) -> Result<&'a Vec<Value>, IngestError> {
        self.map[key]
            .as_array()
            .ok_or_else(|| violation(&self.at(key), "expected an array"))
    }

    fn number(&self, key: &str) -> Result<f64, IngestError> {
        self.map[key]
            .as_f64()
            .ok_or_else(|| violation(&self.at(key), "expected a number"))
    }
}

fn graph_from_value(root: &Value) -> Result<ProcessGraph, IngestError> {
    let top = Obj::new(root, String::new(), &["format_version", "meta", "nodes", "edges"], &[])?;
    let version = top.str("format_version")?;
    if version != FORMAT_VERSION {
        return Err(violation(
            "/format_version",
            format!("unsupported version '{version}', expected '{FORMAT_VERSION}'"),
        ));
    }

    let meta_path = top.at("meta");
    let meta = top.map["meta"]
        .as_object()
        .ok_or_else(|| violation(&meta_path, "expected an object"))?
        .iter()
        .map(|(k, v)| {
            v.as_str()
                .map(|s| (k.clone(), s.to_string()))
                .ok_or_else(|| violation(&pointer(&meta_path, k), "expected a string"))
        })
        .collect::<Result<_, _>>()?;
    let mut graph = ProcessGraph::new(meta);

    let nodes_path = top.at("nodes");
    for (i, value) in top.array("nodes")?.iter().enumerate() {
        let path = format!("{nodes_path}/{i}");
        let node = node_from_value(value, path.clone())?;
        graph
            .add_node(node)
            .map_err(|source| IngestError::Reference { path, source })?;
    }
    let edges_path = top.at("edges");
    for (i, value) in top.array("edges")?.iter().enumerate() {
        let path = format!("{edges_path}/{i}");
        let edge = edge_from_value(value, path.clone())?;
        graph
            .add_edge(edge)
            .map_err(|source| IngestError::Reference { path, source })?;
    }
    Ok(graph)
}

fn attrs_from_value(value: &Value, path: &str) -> Result<Attrs, IngestError> {
    let map = value
        .as_object()
        .ok_or_else(|| violation(path, "expected an object"))?;
    map.iter()
        .map(|(k, v)| {
            AttrValue::from_json(v)
                .map(|a| (k.clone(), a))
                .ok_or_else(|| violation(&pointer(path, k), "expected a number, string or boolean"))
        })
        .collect()
}

pub(crate) fn node_from_value(value: &Value, path: String) -> Result<Node, IngestError> {
    let obj = Obj::new(value, path, &["tag", "kind", "nozzles", "attrs"], &["position"])?;
    let tag = obj.str("tag")?.to_string();
    let kind: NodeKind = obj
        .str("kind")?
        .parse()
        .map_err(|e: crate::graph::UnknownKind| violation(&obj.at("kind"), e.to_string()))?;

    let position = match obj.get("position") {
        None => None,
        Some(v) => Some(position_from_value(v, obj.at("position"))?),
    };

    let nozzles_path = obj.at("nozzles");
    let nozzles = obj
        .array("nozzles")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = Obj::new(v, format!("{nozzles_path}/{i}"), &["id", "direction", "ordinal"], &[])?;
            let direction = match n.str("direction")? {
                "inlet" => Direction::Inlet,
                "outlet" => Direction::Outlet,
                other => {
                    return Err(violation(
                        &n.at("direction"),
                        format!("expected 'inlet' or 'outlet', got '{other}'"),
                    ))
                }
            };
            let ordinal = n.map["ordinal"]
                .as_u64()
                .and_then(|o| u32::try_from(o).ok())
                .ok_or_else(|| violation(&n.at("ordinal"), "expected a nonnegative integer"))?;
            Ok(Nozzle::new(n.str("id")?, direction, ordinal))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let attrs = attrs_from_value(&obj.map["attrs"], &obj.at("attrs"))?;
    Ok(Node {
        tag,
        kind,
        position,
        nozzles,
        attrs,
    })
}

fn position_from_value(value: &Value, path: String) -> Result<Position, IngestError> {
    let obj = Obj::new(value, path, &["frame", "x", "y"], &["z"])?;
    let frame = match obj.str("frame")? {
        "document" => Frame::Document,
        "plant" => Frame::Plant,
        other => {
            return Err(violation(
                &obj.at("frame"),
                format!("expected 'document' or 'plant', got '{other}'"),
            ))
        }
    };
    let z = match obj.get("z") {
        None => None,
        Some(_) => Some(obj.number("z")?),
    };
    Ok(Position {
        frame,
        x: obj.number("x")?,
        y: obj.number("y")?,
        z,
    })
}

fn endpoint_from_value(value: &Value, path: String) -> Result<Endpoint, IngestError> {
    let obj = Obj::new(value, path, &["node"], &["nozzle"])?;
    let nozzle = match obj.get("nozzle") {
        None => None,
        Some(_) => Some(obj.str("nozzle")?.to_string()),
    };
    Ok(Endpoint {
        node: obj.str("node")?.to_string(),
        nozzle,
    })
}

pub(crate) fn edge_from_value(value: &Value, path: String) -> Result<Edge, IngestError> {
    let obj = Obj::new(value, path, &["tag", "kind", "source", "target", "attrs"], &[])?;
    let kind: EdgeKind = obj
        .str("kind")?
        .parse()
        .map_err(|e: String| violation(&obj.at("kind"), e))?;
    Ok(Edge {
        tag: obj.str("tag")?.to_string(),
        kind,
        source: endpoint_from_value(&obj.map["source"], obj.at("source"))?,
        target: endpoint_from_value(&obj.map["target"], obj.at("target"))?,
        attrs: attrs_from_value(&obj.map["attrs"], &obj.at("attrs"))?,
    })
}
