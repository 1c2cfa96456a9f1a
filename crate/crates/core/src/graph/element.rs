//! Node, nozzle and edge types of the process graph.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Attribute keys with a fixed canonical unit. Values under these keys must be numbers.
pub const NUMERIC_KEYS: &[&str] = &["volume", "max_flow", "flow", "diameter", "length"];

/// Prefix of per-outlet splitter fraction attributes (`split.<nozzle-id>`).
pub const SPLIT_PREFIX: &str = "split.";

/// Returns true when `key` must hold a number.
pub fn is_numeric_key(key: &str) -> bool {
    NUMERIC_KEYS.contains(&key) || key.starts_with(SPLIT_PREFIX)
}

/// Equipment type of a node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Tank,
    Pump,
    Valve,
    Mixer,
    Splitter,
    HeatExchanger,
    Instrument,
    Controller,
    Source,
    Sink,
    /// Reserved for nodes generated by stream insertion.
    Stream,
    Other(String),
}

impl NodeKind {
    /// Every kind with a fixed name, in declaration order.
    pub const NAMED: [NodeKind; 11] = [
        NodeKind::Tank,
        NodeKind::Pump,
        NodeKind::Valve,
        NodeKind::Mixer,
        NodeKind::Splitter,
        NodeKind::HeatExchanger,
        NodeKind::Instrument,
        NodeKind::Controller,
        NodeKind::Source,
        NodeKind::Sink,
        NodeKind::Stream,
    ];

    pub fn name(&self) -> &str {
        match self {
            NodeKind::Tank => "tank",
            NodeKind::Pump => "pump",
            NodeKind::Valve => "valve",
            NodeKind::Mixer => "mixer",
            NodeKind::Splitter => "splitter",
            NodeKind::HeatExchanger => "hx",
            NodeKind::Instrument => "instrument",
            NodeKind::Controller => "controller",
            NodeKind::Source => "source",
            NodeKind::Sink => "sink",
            NodeKind::Stream => "stream",
            NodeKind::Other(name) => name,
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, NodeKind::Other(_))
    }

    /// Nozzles synthesized for a node of this kind when none are declared.
    pub fn default_nozzle_counts(&self) -> (u32, u32) {
        match self {
            NodeKind::Source => (0, 1),
            NodeKind::Sink => (1, 0),
            NodeKind::Mixer => (2, 1),
            NodeKind::Splitter => (1, 2),
            NodeKind::Controller => (0, 0),
            NodeKind::Other(_) => (0, 0),
            _ => (1, 1),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Other(name) => write!(f, "other:{name}"),
            kind => f.write_str(kind.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown node kind '{0}'")]
pub struct UnknownKind(pub String);

impl FromStr for NodeKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(name) = s.strip_prefix("other:") {
            return if name.is_empty() {
                Err(UnknownKind(s.to_string()))
            } else {
                Ok(NodeKind::Other(name.to_string()))
            };
        }
        NodeKind::NAMED
            .iter()
            .find(|k| k.name() == s)
            .cloned()
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

impl Serialize for NodeKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Flow direction of a nozzle as seen from its node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Inlet,
    Outlet,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Inlet => "inlet",
            Direction::Outlet => "outlet",
        }
    }
}

/// A connection point on a node where a pipe attaches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nozzle {
    pub id: String,
    pub direction: Direction,
    pub ordinal: u32,
}

impl Nozzle {
    pub fn new(id: impl Into<String>, direction: Direction, ordinal: u32) -> Self {
        Self {
            id: id.into(),
            direction,
            ordinal,
        }
    }

    pub fn inlet(ordinal: u32) -> Self {
        Self::new(format!("in{ordinal}"), Direction::Inlet, ordinal)
    }

    pub fn outlet(ordinal: u32) -> Self {
        Self::new(format!("out{ordinal}"), Direction::Outlet, ordinal)
    }

    /// `in1..inN` followed by `out1..outM`.
    pub fn numbered(inlets: u32, outlets: u32) -> Vec<Nozzle> {
        (1..=inlets)
            .map(Nozzle::inlet)
            .chain((1..=outlets).map(Nozzle::outlet))
            .collect()
    }
}

/// An attribute value. Numbers are always finite.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Number(f64),
    Text(String),
    Bool(bool),
}

impl AttrValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            AttrValue::Number(v) => v.is_finite(),
            _ => true,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AttrValue::Number(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            AttrValue::Text(s) => serde_json::Value::String(s.clone()),
            AttrValue::Bool(b) => serde_json::Value::Bool(*b),
        }
    }

    pub fn from_json(value: &serde_json::Value) -> Option<AttrValue> {
        match value {
            serde_json::Value::Number(n) => n.as_f64().map(AttrValue::Number),
            serde_json::Value::String(s) => Some(AttrValue::Text(s.clone())),
            serde_json::Value::Bool(b) => Some(AttrValue::Bool(*b)),
            _ => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(v) => write!(f, "{v}"),
            AttrValue::Text(s) => f.write_str(s),
            AttrValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Number(v)
    }
}

impl From<&str> for AttrValue {
    fn from(v: &str) -> Self {
        AttrValue::Text(v.to_string())
    }
}

impl From<bool> for AttrValue {
    fn from(v: bool) -> Self {
        AttrValue::Bool(v)
    }
}

impl Serialize for AttrValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            AttrValue::Number(v) => serializer.serialize_f64(*v),
            AttrValue::Text(s) => serializer.serialize_str(s),
            AttrValue::Bool(b) => serializer.serialize_bool(*b),
        }
    }
}

impl<'de> Deserialize<'de> for AttrValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        AttrValue::from_json(&value)
            .filter(AttrValue::is_valid)
            .ok_or_else(|| serde::de::Error::custom("expected a finite number, string or boolean"))
    }
}

pub type Attrs = BTreeMap<String, AttrValue>;

/// Coordinate frame of a node position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Drawing coordinates in millimetres.
    Document,
    /// Plant coordinates in metres.
    Plant,
}

/// Location in the source drawing or in the plant. Carried, never interpreted.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub frame: Frame,
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
}

impl Position {
    pub fn document(x: f64, y: f64) -> Self {
        Self {
            frame: Frame::Document,
            x,
            y,
            z: None,
        }
    }

    pub fn plant(x: f64, y: f64, z: f64) -> Self {
        Self {
            frame: Frame::Plant,
            x,
            y,
            z: Some(z),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_none_or(f64::is_finite)
    }
}

/// A plant element.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub tag: String,
    pub kind: NodeKind,
    pub position: Option<Position>,
    pub nozzles: Vec<Nozzle>,
    pub attrs: Attrs,
}

impl Node {
    /// A node with the default nozzles of its kind.
    pub fn new(tag: impl Into<String>, kind: NodeKind) -> Self {
        let (inlets, outlets) = kind.default_nozzle_counts();
        Self {
            tag: tag.into(),
            kind,
            position: None,
            nozzles: Nozzle::numbered(inlets, outlets),
            attrs: Attrs::new(),
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<AttrValue>) -> Self {
        self.attrs.insert(key.into(), value.into());
        self
    }

    pub fn with_nozzles(mut self, nozzles: Vec<Nozzle>) -> Self {
        self.nozzles = nozzles;
        self
    }

    pub fn with_position(mut self, position: Position) -> Self {
        self.position = Some(position);
        self
    }

    pub fn nozzle(&self, id: &str) -> Option<&Nozzle> {
        self.nozzles.iter().find(|n| n.id == id)
    }

    pub fn nozzles_in(&self, direction: Direction) -> impl Iterator<Item = &Nozzle> {
        self.nozzles.iter().filter(move |n| n.direction == direction)
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.attrs.get(key).and_then(AttrValue::as_number)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ProcessFlow,
    Signal,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::ProcessFlow => "process_flow",
            EdgeKind::Signal => "signal",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "process_flow" => Ok(EdgeKind::ProcessFlow),
            "signal" => Ok(EdgeKind::Signal),
            other => Err(format!("unknown edge kind '{other}'")),
        }
    }
}

/// One end of an edge. Process-flow ends name a nozzle; signal ends do not.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub node: String,
    pub nozzle: Option<String>,
}

impl Endpoint {
    pub fn port(node: impl Into<String>, nozzle: impl Into<String>) -> Self {
        Self {
            node: node.into(),
            nozzle: Some(nozzle.into()),
        }
    }

    pub fn node(node: impl Into<String>) -> Self {
        Self {
            node: node.into(),
            nozzle: None,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.nozzle {
            Some(nozzle) => write!(f, "{}.{}", self.node, nozzle),
            None => f.write_str(&self.node),
        }
    }
}

/// A pipe or a control signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tag: String,
    pub kind: EdgeKind,
    pub source: Endpoint,
    pub target: Endpoint,
    pub attrs: Attrs,
}

impl Edge {
    pub fn pipe(tag: impl Into<String>, source: Endpoint, target: Endpoint) -> Self {
        Self {
            tag: tag.into(),
            kind: EdgeKind::ProcessFlow,
            source,
            target,
            attrs: Attrs::new(),
        }
    }

    pub fn signal(tag: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            kind: EdgeKind::Signal,
            source: Endpoint::node(source),
            target: Endpoint::node(target),
            attrs: Attrs::new(),
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<AttrValue>) -> Self {
        self.attrs.insert(key.into(), value.into());
        self
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.attrs.get(key).and_then(AttrValue::as_number)
    }
}
