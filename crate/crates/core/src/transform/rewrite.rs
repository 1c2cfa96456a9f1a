//! Rule-driven rewriting that makes a graph acceptable to a target simulator.
//!
//! Rules run in list order over a working copy. Every primitive change is
//! recorded in a [`RewriteLog`] that can be replayed against the original
//! input to reproduce the output. Iteration is always in tag order, so equal
//! inputs give equal outputs, logs and generated tags.

use std::collections::BTreeSet;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::{ConfigError, Element, TransformError};
use crate::export::to_canonical_json;
use crate::graph::{
    is_numeric_key, AttrValue, Attrs, Direction, Edge, EdgeKind, Endpoint, GraphError, Node,
    NodeKind, Nozzle, ProcessGraph,
};

/// Tag of the stream node inserted into pipe `edge`.
pub fn stream_tag(edge: &str) -> String {
    format!("S@{edge}")
}

/// What a `RequireAttrDefault` rule fills in.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrTarget {
    Nodes(NodeKind),
    Edges(EdgeKind),
}

impl AttrTarget {
    fn parse(text: &str) -> Result<Self, String> {
        if let Ok(kind) = text.parse::<EdgeKind>() {
            return Ok(AttrTarget::Edges(kind));
        }
        text.parse::<NodeKind>()
            .map(AttrTarget::Nodes)
            .map_err(|_| format!("'{text}' is neither a node kind nor an edge kind"))
    }

    fn name(&self) -> String {
        match self {
            AttrTarget::Nodes(kind) => kind.to_string(),
            AttrTarget::Edges(kind) => kind.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    /// Splits every pipe `A -> B` into `A -> S@<pipe> -> B`.
    InsertStreamNodes,
    /// Puts an `other:nozzle` node between each connected nozzle and its pipe.
    ReifyNozzles,
    /// Sets `key` on every matching element that lacks it.
    RequireAttrDefault {
        key: String,
        value: AttrValue,
        applies_to: AttrTarget,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub kind: RuleKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub simulator_name: String,
    pub rules: Vec<Rule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRuleSet {
    simulator_name: String,
    rules: Vec<RawRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    id: String,
    kind: String,
    #[serde(default)]
    params: Map<String, Value>,
}

impl RuleSet {
    pub fn new(simulator_name: impl Into<String>, rules: Vec<Rule>) -> Result<Self, ConfigError> {
        let rs = Self {
            simulator_name: simulator_name.into(),
            rules,
        };
        rs.check()?;
        Ok(rs)
    }

    /// `{simulator_name, rules: [{id, kind, params}]}`.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawRuleSet = serde_json::from_str(text)?;
        let rules = raw
            .rules
            .into_iter()
            .map(|r| {
                let kind = rule_kind(&r.kind, &r.params)
                    .map_err(|m| ConfigError::Invalid(format!("rule '{}': {m}", r.id)))?;
                Ok(Rule { id: r.id, kind })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        Self::new(raw.simulator_name, rules)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.simulator_name.is_empty() {
            return Err(ConfigError::Invalid("simulator_name is empty".into()));
        }
        let mut ids = BTreeSet::new();
        for rule in &self.rules {
            if rule.id.is_empty() {
                return Err(ConfigError::Invalid("rule id is empty".into()));
            }
            if !ids.insert(rule.id.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate rule id '{}'", rule.id)));
            }
            if let RuleKind::RequireAttrDefault { key, value, .. } = &rule.kind {
                if key.is_empty() || !value.is_valid() || (is_numeric_key(key) && value.as_number().is_none()) {
                    return Err(ConfigError::Invalid(format!(
                        "rule '{}': invalid default {key}={value}",
                        rule.id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn rule_kind(kind: &str, params: &Map<String, Value>) -> Result<RuleKind, String> {
    let allow = |keys: &[&str]| {
        params
            .keys()
            .find(|k| !keys.contains(&k.as_str()))
            .map_or(Ok(()), |k| Err(format!("unknown parameter '{k}'")))
    };
    match kind {
        "insert_stream_nodes" => allow(&[]).map(|_| RuleKind::InsertStreamNodes),
        "reify_nozzles" => allow(&[]).map(|_| RuleKind::ReifyNozzles),
        "require_attr_default" => {
            allow(&["key", "value", "applies_to"])?;
            let key = params
                .get("key")
                .and_then(Value::as_str)
                .ok_or("parameter 'key' must be a string")?
                .to_string();
            let value = params
                .get("value")
                .and_then(AttrValue::from_json)
                .ok_or("parameter 'value' must be a number, string or boolean")?;
            let applies_to = match params.get("applies_to") {
                None => AttrTarget::Edges(EdgeKind::ProcessFlow),
                Some(v) => AttrTarget::parse(v.as_str().ok_or("parameter 'applies_to' must be a string")?)?,
            };
            Ok(RuleKind::RequireAttrDefault { key, value, applies_to })
        }
        other => Err(format!(
            "unknown rule kind '{other}'; expected insert_stream_nodes, reify_nozzles or require_attr_default"
        )),
    }
}

/// A primitive graph change.
#[derive(Debug, Clone, PartialEq)]
pub enum RewriteAction {
    AddedNode(Node),
    AddedEdge(Edge),
    /// Carries the removed edge so the log reads on its own.
    RemovedEdge(Edge),
    SetAttr {
        element: Element,
        key: String,
        value: AttrValue,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteEntry {
    pub rule_id: String,
    pub subject: String,
    pub action: RewriteAction,
}

impl RewriteEntry {
    pub fn action_name(&self) -> &'static str {
        match self.action {
            RewriteAction::AddedNode(_) => "added_node",
            RewriteAction::AddedEdge(_) => "added_edge",
            RewriteAction::RemovedEdge(_) => "removed_edge",
            RewriteAction::SetAttr { .. } => "set_attr",
        }
    }

    fn detail_value(&self) -> Value {
        match &self.action {
            RewriteAction::AddedNode(node) => crate::export::node_value(node),
            RewriteAction::AddedEdge(edge) | RewriteAction::RemovedEdge(edge) => crate::export::edge_value(edge),
            RewriteAction::SetAttr { element, key, value } => {
                let mut m = Map::new();
                m.insert(
                    "element".into(),
                    match element {
                        Element::Node => "node",
                        Element::Edge => "edge",
                    }
                    .into(),
                );
                m.insert("key".into(), key.clone().into());
                m.insert("value".into(), value.to_json());
                Value::Object(m)
            }
        }
    }

    /// The changed element or attribute, as canonical JSON.
    pub fn detail(&self) -> String {
        to_canonical_json(&self.detail_value())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RewriteLog {
    pub entries: Vec<RewriteEntry>,
}

impl RewriteLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, action_name: &str) -> usize {
        self.entries.iter().filter(|e| e.action_name() == action_name).count()
    }

    /// Re-applies every entry, in order, to a copy of `input`.
    pub fn replay(&self, input: &ProcessGraph) -> Result<ProcessGraph, GraphError> {
        let mut g = input.clone();
        for entry in &self.entries {
            match &entry.action {
                RewriteAction::AddedNode(node) => g.add_node(node.clone())?,
                RewriteAction::AddedEdge(edge) => g.add_edge(edge.clone())?,
                RewriteAction::RemovedEdge(edge) => {
                    g.remove_edge(&edge.tag)?;
                }
                RewriteAction::SetAttr { element, key, value } => match element {
                    Element::Node => g.set_node_attr(&entry.subject, key, value.clone())?,
                    Element::Edge => g.set_edge_attr(&entry.subject, key, value.clone())?,
                },
            }
        }
        Ok(g)
    }

    /// `{"entries":[{"action","detail","rule_id","subject"}]}`, canonical.
    pub fn to_json(&self) -> String {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut m = Map::new();
                m.insert("rule_id".into(), e.rule_id.clone().into());
                m.insert("action".into(), e.action_name().into());
                m.insert("subject".into(), e.subject.clone().into());
                m.insert("detail".into(), e.detail_value());
                Value::Object(m)
            })
            .collect();
        let mut root = Map::new();
        root.insert("entries".into(), Value::Array(entries));
        to_canonical_json(&Value::Object(root))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawLog {
            entries: Vec<RawEntry>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawEntry {
            rule_id: String,
            action: String,
            subject: String,
            detail: Value,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawSet {
            element: Element,
            key: String,
            value: AttrValue,
        }

        let raw: RawLog = serde_json::from_str(text)?;
        let invalid = |i: usize, m: String| ConfigError::Invalid(format!("entry {i}: {m}"));
        let entries = raw
            .entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let action = match e.action.as_str() {
                    "added_node" => RewriteAction::AddedNode(
                        crate::ingest::node_from_json(&e.detail).map_err(|err| invalid(i, err.to_string()))?,
                    ),
                    "added_edge" => RewriteAction::AddedEdge(
                        crate::ingest::edge_from_json(&e.detail).map_err(|err| invalid(i, err.to_string()))?,
                    ),
                    "removed_edge" => RewriteAction::RemovedEdge(
                        crate::ingest::edge_from_json(&e.detail).map_err(|err| invalid(i, err.to_string()))?,
                    ),
                    "set_attr" => {
                        let set: RawSet = serde_json::from_value(e.detail)?;
                        RewriteAction::SetAttr {
                            element: set.element,
                            key: set.key,
                            value: set.value,
                        }
                    }
                    other => return Err(invalid(i, format!("unknown action '{other}'"))),
                };
                Ok(RewriteEntry {
                    rule_id: e.rule_id,
                    subject: e.subject,
                    action,
                })
            })
            .collect::<Result<_, ConfigError>>()?;
        Ok(Self { entries })
    }
}

/// Working copy plus log; every change goes through here.
struct Recorder<'r> {
    graph: ProcessGraph,
    log: RewriteLog,
    rule: &'r str,
}

impl Recorder<'_> {
    fn push(&mut self, subject: &str, action: RewriteAction) {
        self.log.entries.push(RewriteEntry {
            rule_id: self.rule.to_string(),
            subject: subject.to_string(),
            action,
        });
    }

    fn add_node(&mut self, node: Node) -> Result<(), TransformError> {
        self.graph.add_node(node.clone()).map_err(collision)?;
        let tag = node.tag.clone();
        self.push(&tag, RewriteAction::AddedNode(node));
        Ok(())
    }

    fn add_edge(&mut self, edge: Edge) -> Result<(), TransformError> {
        self.graph.add_edge(edge.clone()).map_err(collision)?;
        let tag = edge.tag.clone();
        self.push(&tag, RewriteAction::AddedEdge(edge));
        Ok(())
    }

    fn remove_edge(&mut self, tag: &str) -> Result<Edge, TransformError> {
        let edge = self.graph.remove_edge(tag)?;
        self.push(tag, RewriteAction::RemovedEdge(edge.clone()));
        Ok(edge)
    }

    fn set_attr(&mut self, element: Element, tag: &str, key: &str, value: &AttrValue) -> Result<(), TransformError> {
        match element {
            Element::Node => self.graph.set_node_attr(tag, key, value.clone())?,
            Element::Edge => self.graph.set_edge_attr(tag, key, value.clone())?,
        }
        self.push(
            tag,
            RewriteAction::SetAttr {
                element,
                key: key.to_string(),
                value: value.clone(),
            },
        );
        Ok(())
    }

    fn ensure_free_node(&self, tag: &str) -> Result<(), TransformError> {
        match self.graph.node(tag) {
            Some(_) => Err(TransformError::TagCollision { tag: tag.to_string() }),
            None => Ok(()),
        }
    }

    fn ensure_free_edge(&self, tag: &str) -> Result<(), TransformError> {
        match self.graph.edge(tag) {
            Some(_) => Err(TransformError::TagCollision { tag: tag.to_string() }),
            None => Ok(()),
        }
    }
}

fn collision(e: GraphError) -> TransformError {
    match e {
        GraphError::DuplicateTag(tag) => TransformError::TagCollision { tag },
        other => TransformError::Graph(other),
    }
}

fn pass_through_node(tag: String, kind: NodeKind, attrs: Attrs) -> Node {
    Node {
        tag,
        kind,
        position: None,
        nozzles: vec![Nozzle::inlet(1), Nozzle::outlet(1)],
        attrs,
    }
}

fn insert_stream_nodes(rec: &mut Recorder<'_>) -> Result<(), TransformError> {
    let pipes: Vec<String> = rec
        .graph
        .edges_of_kind(EdgeKind::ProcessFlow)
        .map(|e| e.tag.clone())
        .collect();
    for tag in pipes {
        let stream = stream_tag(&tag);
        let (first, second) = (format!("{tag}.a"), format!("{tag}.b"));
        rec.ensure_free_node(&stream)?;
        rec.ensure_free_edge(&first)?;
        rec.ensure_free_edge(&second)?;

        let pipe = rec.remove_edge(&tag)?;
        // The stream carries the whole pipe; the halves drop `length`.
        let mut half = pipe.attrs.clone();
        half.remove("length");
        rec.add_node(pass_through_node(stream.clone(), NodeKind::Stream, pipe.attrs.clone()))?;
        rec.add_edge(Edge {
            tag: first,
            kind: EdgeKind::ProcessFlow,
            source: pipe.source.clone(),
            target: Endpoint::port(&stream, "in1"),
            attrs: half.clone(),
        })?;
        rec.add_edge(Edge {
            tag: second,
            kind: EdgeKind::ProcessFlow,
            source: Endpoint::port(&stream, "out1"),
            target: pipe.target.clone(),
            attrs: half,
        })?;
    }
    Ok(())
}

fn reify_nozzles(rec: &mut Recorder<'_>) -> Result<(), TransformError> {
    let nozzle_kind = NodeKind::Other("nozzle".into());
    let owners: Vec<Node> = rec
        .graph
        .nodes()
        .filter(|n| n.kind != nozzle_kind)
        .cloned()
        .collect();
    for owner in owners {
        for nozzle in &owner.nozzles {
            let Some(pipe_tag) = rec.graph.pipe_at(&owner.tag, &nozzle.id).map(|e| e.tag.clone()) else {
                continue;
            };
            let reified = format!("{}@{}", owner.tag, nozzle.id);
            rec.ensure_free_node(&reified)?;
            rec.ensure_free_edge(&reified)?;

            let pipe = rec.remove_edge(&pipe_tag)?;
            let mut attrs = Attrs::new();
            attrs.insert("element".into(), AttrValue::Text(owner.tag.clone()));
            attrs.insert("nozzle".into(), AttrValue::Text(nozzle.id.clone()));
            rec.add_node(pass_through_node(reified.clone(), nozzle_kind.clone(), attrs))?;

            let own_port = Endpoint::port(&owner.tag, &nozzle.id);
            let (stub, rerouted) = match nozzle.direction {
                Direction::Outlet => (
                    Edge::pipe(&reified, own_port, Endpoint::port(&reified, "in1")),
                    Edge {
                        source: Endpoint::port(&reified, "out1"),
                        ..pipe
                    },
                ),
                Direction::Inlet => (
                    Edge::pipe(&reified, Endpoint::port(&reified, "out1"), own_port),
                    Edge {
                        target: Endpoint::port(&reified, "in1"),
                        ..pipe
                    },
                ),
            };
            match nozzle.direction {
                Direction::Outlet => {
                    rec.add_edge(stub)?;
                    rec.add_edge(rerouted)?;
                }
                Direction::Inlet => {
                    rec.add_edge(rerouted)?;
                    rec.add_edge(stub)?;
                }
            }
        }
    }
    Ok(())
}

fn require_attr_default(
    rec: &mut Recorder<'_>,
    key: &str,
    value: &AttrValue,
    target: &AttrTarget,
) -> Result<(), TransformError> {
    let (element, tags): (Element, Vec<String>) = match target {
        AttrTarget::Nodes(kind) => (
            Element::Node,
            rec.graph
                .nodes()
                .filter(|n| &n.kind == kind && !n.attrs.contains_key(key))
                .map(|n| n.tag.clone())
                .collect(),
        ),
        AttrTarget::Edges(kind) => (
            Element::Edge,
            rec.graph
                .edges_of_kind(*kind)
                .filter(|e| !e.attrs.contains_key(key))
                .map(|e| e.tag.clone())
                .collect(),
        ),
    };
    for tag in tags {
        rec.set_attr(element, &tag, key, value)?;
    }
    Ok(())
}

/// Applies the rules of `rules` in order. Fails without partial output.
pub fn apply_ruleset(graph: &ProcessGraph, rules: &RuleSet) -> Result<(ProcessGraph, RewriteLog), TransformError> {
    let mut graph = graph.clone();
    let mut log = RewriteLog::default();
    for rule in &rules.rules {
        let mut rec = Recorder {
            graph,
            log,
            rule: &rule.id,
        };
        match &rule.kind {
            RuleKind::InsertStreamNodes => insert_stream_nodes(&mut rec)?,
            RuleKind::ReifyNozzles => reify_nozzles(&mut rec)?,
            RuleKind::RequireAttrDefault { key, value, applies_to } => {
                require_attr_default(&mut rec, key, value, applies_to)?
            }
        }
        graph = rec.graph;
        log = rec.log;
    }
    Ok((graph, log))
}

impl Rule {
    pub fn new(id: impl Into<String>, kind: RuleKind) -> Self {
        Self { id: id.into(), kind }
    }

    /// `{id, kind, params}` as written in rule files.
    pub fn to_json_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), self.id.clone().into());
        let mut params = Map::new();
        let kind = match &self.kind {
            RuleKind::InsertStreamNodes => "insert_stream_nodes",
            RuleKind::ReifyNozzles => "reify_nozzles",
            RuleKind::RequireAttrDefault { key, value, applies_to } => {
                params.insert("key".into(), key.clone().into());
                params.insert("value".into(), value.to_json());
                params.insert("applies_to".into(), applies_to.name().into());
                "require_attr_default"
            }
        };
        m.insert("kind".into(), kind.into());
        m.insert("params".into(), Value::Object(params));
        Value::Object(m)
    }
}
