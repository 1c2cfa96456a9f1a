//! PIDL: one declaration per line.
//!
//! ```text
//! # comment
//! node S1 type=source flow=10
//! node SP1 type=splitter out=3 split.out1=0.2 split.out2=0.3 split.out3=0.5
//! pipe E1: S1.out1 -> SP1.in1 material=water diameter=0.05
//! signal s1: FT1 -> C1
//! ```
//!
//! Nodes must be declared before a pipe or signal refers to them. Reserved
//! node keys: `in=<n>`/`out=<m>` override the default nozzle counts of the
//! kind, and `pos=doc:x,y` or `pos=plant:x,y,z` record a position. Values are
//! numbers (no unit suffixes), `true`/`false`, bare words, or double-quoted
//! text.

use std::collections::BTreeSet;

use super::{decode_utf8, IngestError, ParseError, SourceDoc, SourceFormat};
use crate::graph::{
    is_authored_tag, is_numeric_key, is_valid_nozzle_id, AttrValue, Attrs, Edge, EdgeKind,
    Endpoint, Frame, GraphError, Node, NodeKind, Nozzle, Position, ProcessGraph,
    MAX_AUTHORED_TAG_LEN,
};

const MAX_DECLARED_NOZZLES: u32 = 99;

pub fn parse_pidl(doc: &SourceDoc) -> Result<ProcessGraph, IngestError> {
    if doc.format != SourceFormat::Pidl {
        return Err(IngestError::WrongFormat {
            expected: SourceFormat::Pidl,
            found: doc.format,
        });
    }
    if doc.id.is_empty() {
        return Err(IngestError::EmptyId);
    }
    let text = decode_utf8(&doc.content).map_err(|e| IngestError::Parse(vec![e]))?;

    let mut syntax_errors = Vec::new();
    let mut items = Vec::new();
    // Tags of node lines that failed to parse; references to them are not
    // reported again in the reference pass.
    let mut broken = BTreeSet::new();

    for (index, raw) in text.split('\n').enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let chars: Vec<char> = raw.chars().collect();
        let mut cur = Cursor {
            line: index + 1,
            chars: &chars,
            pos: 0,
        };
        cur.skip_ws();
        if cur.at_end() || cur.peek() == Some('#') {
            continue;
        }
        let mut tag = None;
        match parse_line(&mut cur, &mut tag) {
            Ok(item) => items.push(item),
            Err(e) => {
                syntax_errors.push(e);
                if let Some(tag) = tag {
                    broken.insert(tag);
                }
            }
        }
    }

    let mut graph = ProcessGraph::default();
    graph.set_meta("source", doc.id.clone());
    graph.set_meta("generator", concat!("pidtwin-core/", env!("CARGO_PKG_VERSION")));

    let mut reference_errors = Vec::new();
    for item in items {
        if let Err(e) = item.apply(&mut graph, &broken) {
            reference_errors.push(e);
        }
    }

    syntax_errors.extend(reference_errors);
    if syntax_errors.is_empty() {
        Ok(graph)
    } else {
        Err(IngestError::Parse(syntax_errors))
    }
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    col: usize,
}

enum Declaration {
    Node(Node),
    Edge {
        edge: Edge,
        source_col: usize,
        target_col: usize,
    },
}

struct Item {
    line: usize,
    tag: Token,
    decl: Declaration,
}

impl Item {
    fn error(&self, col: usize, snippet: &str, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: col,
            message: message.into(),
            snippet: snippet.to_string(),
        }
    }

    fn apply(self, graph: &mut ProcessGraph, broken: &BTreeSet<String>) -> Result<(), ParseError> {
        let tag_col = self.tag.col;
        match &self.decl {
            Declaration::Node(node) => graph.add_node(node.clone()).map_err(|e| match e {
                GraphError::DuplicateTag(t) => {
                    self.error(tag_col, &t, format!("node '{t}' is already declared"))
                }
                other => self.error(tag_col, &self.tag.text, other.to_string()),
            }),
            Declaration::Edge {
                edge,
                source_col,
                target_col,
            } => {
                let ends = [(&edge.source, *source_col), (&edge.target, *target_col)];
                if ends.iter().any(|(end, _)| broken.contains(&end.node)) {
                    return Ok(());
                }
                for (end, col) in ends {
                    if graph.node(&end.node).is_none() {
                        return Err(self.error(
                            col,
                            &end.node,
                            format!("unknown node '{}' (nodes must be declared before use)", end.node),
                        ));
                    }
                }
                let col_of = |endpoint: &str| {
                    ends.iter()
                        .find(|(end, _)| end.to_string() == endpoint)
                        .map_or(tag_col, |(_, col)| *col)
                };
                graph.add_edge(edge.clone()).map_err(|e| match &e {
                    GraphError::UnknownEndpoint { endpoint, .. } => {
                        self.error(col_of(endpoint), endpoint, format!("unknown nozzle '{endpoint}'"))
                    }
                    GraphError::NozzleOccupied {
                        endpoint, occupant, ..
                    } => self.error(
                        col_of(endpoint),
                        endpoint,
                        format!("nozzle '{endpoint}' is already connected by '{occupant}'"),
                    ),
                    GraphError::DirectionViolation { endpoint, found, .. } => self.error(
                        col_of(endpoint),
                        endpoint,
                        format!(
                            "pipes run from an outlet to an inlet, but '{endpoint}' is an {}",
                            found.name()
                        ),
                    ),
                    GraphError::DuplicateTag(t) => {
                        self.error(tag_col, t, format!("edge '{t}' is already declared"))
                    }
                    other => self.error(tag_col, &self.tag.text, other.to_string()),
                })
            }
        }
    }
}

struct Cursor<'a> {
    line: usize,
    chars: &'a [char],
    pos: usize,
}

fn is_tag_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

impl Cursor<'_> {
    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn at_arrow(&self) -> bool {
        self.peek() == Some('-') && self.chars.get(self.pos + 1) == Some(&'>')
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn eat(&mut self, s: &str) -> bool {
        let want: Vec<char> = s.chars().collect();
        if self.chars[self.pos..].starts_with(&want) {
            self.pos += want.len();
            true
        } else {
            false
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> Token {
        let col = self.col();
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        Token {
            text: self.chars[start..self.pos].iter().collect(),
            col,
        }
    }

    /// Tag characters, stopping before a `->` arrow.
    fn take_tag_like(&mut self) -> Token {
        let col = self.col();
        let start = self.pos;
        while self.peek().is_some_and(is_tag_char) && !self.at_arrow() {
            self.pos += 1;
        }
        Token {
            text: self.chars[start..self.pos].iter().collect(),
            col,
        }
    }

    /// The whitespace-delimited fragment starting at `col`, or the rest of
    /// the line when that is empty.
    fn snippet_at(&self, col: usize) -> String {
        let start = (col - 1).min(self.chars.len());
        let word: String = self.chars[start..]
            .iter()
            .take_while(|c| !c.is_whitespace())
            .collect();
        if word.is_empty() {
            self.chars.iter().collect::<String>().trim().to_string()
        } else {
            word
        }
    }

    fn error_at(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: col,
            message: message.into(),
            snippet: self.snippet_at(col),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.col(), message)
    }

    fn require_ws(&mut self, what: &str) -> Result<(), ParseError> {
        if self.skip_ws() {
            Ok(())
        } else if self.at_end() {
            Err(self.error(format!("expected {what}")))
        } else {
            Err(self.error(format!("unexpected character '{}'", self.peek().unwrap())))
        }
    }

    fn skip_ws_then(&mut self, literal: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.eat(literal) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{literal}'")))
        }
    }

    fn tag(&mut self) -> Result<Token, ParseError> {
        let token = self.take_tag_like();
        if token.text.is_empty() {
            return Err(self.error("expected a tag"));
        }
        if token.text.chars().count() > MAX_AUTHORED_TAG_LEN {
            return Err(self.error_at(
                token.col,
                format!("tag is longer than {MAX_AUTHORED_TAG_LEN} characters"),
            ));
        }
        debug_assert!(is_authored_tag(&token.text));
        Ok(token)
    }

    /// `TAG.NOZ`, split at the last dot.
    fn endpoint(&mut self) -> Result<(Endpoint, usize), ParseError> {
        let token = self.take_tag_like();
        if token.text.is_empty() {
            return Err(self.error("expected an endpoint 'TAG.NOZZLE'"));
        }
        let Some((node, nozzle)) = token.text.rsplit_once('.') else {
            return Err(self.error_at(token.col, "expected an endpoint 'TAG.NOZZLE'"));
        };
        if node.is_empty() || node.chars().count() > MAX_AUTHORED_TAG_LEN {
            return Err(self.error_at(token.col, format!("invalid node tag '{node}'")));
        }
        if !is_valid_nozzle_id(nozzle) {
            return Err(self.error_at(token.col, format!("invalid nozzle id '{nozzle}'")));
        }
        Ok((Endpoint::port(node, nozzle), token.col))
    }

    /// Ensures the token just read is followed by whitespace or end of line.
    fn end_of_token(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) if c.is_whitespace() => Ok(()),
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
        }
    }

    fn attrs(&mut self) -> Result<Vec<(Token, RawValue)>, ParseError> {
        let mut out: Vec<(Token, RawValue)> = Vec::new();
        loop {
            let had_ws = self.skip_ws();
            if self.at_end() {
                return Ok(out);
            }
            if !had_ws {
                return Err(self.error(format!("unexpected character '{}'", self.peek().unwrap())));
            }
            let key = self.take_while(is_key_char);
            if key.text.is_empty() {
                return Err(self.error("expected KEY=VALUE"));
            }
            if !self.eat("=") {
                return Err(self.error(format!("expected '=' after '{}'", key.text)));
            }
            let value = self.value(&key.text)?;
            if out.iter().any(|(k, _)| k.text == key.text) {
                return Err(self.error_at(key.col, format!("attribute '{}' given twice", key.text)));
            }
            out.push((key, value));
        }
    }

    fn value(&mut self, key: &str) -> Result<RawValue, ParseError> {
        let col = self.col();
        if self.peek() == Some('"') {
            self.pos += 1;
            let mut text = String::new();
            loop {
                match self.peek() {
                    None => return Err(self.error_at(col, "unterminated string")),
                    Some('"') => {
                        self.pos += 1;
                        break;
                    }
                    Some('\\') => {
                        self.pos += 1;
                        match self.peek() {
                            Some(c @ ('"' | '\\')) => {
                                text.push(c);
                                self.pos += 1;
                            }
                            _ => return Err(self.error("invalid escape; only \\\" and \\\\ are allowed")),
                        }
                    }
                    Some(c) => {
                        text.push(c);
                        self.pos += 1;
                    }
                }
            }
            self.end_of_token()?;
            return Ok(RawValue {
                text,
                quoted: true,
                col,
            });
        }
        let token = self.take_while(|c| !c.is_whitespace());
        if token.text.is_empty() {
            return Err(self.error(format!("missing value for '{key}'")));
        }
        Ok(RawValue {
            text: token.text,
            quoted: false,
            col,
        })
    }
}

struct RawValue {
    text: String,
    quoted: bool,
    col: usize,
}

/// Decimal with optional fraction and exponent; no unit suffix.
fn is_decimal(s: &str) -> bool {
    let s = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
    if !digits(int) || !digits(frac) || (int.is_empty() && frac.is_empty()) {
        return false;
    }
    match exponent {
        None => true,
        Some(e) => {
            let e = e.strip_prefix(['+', '-']).unwrap_or(e);
            !e.is_empty() && digits(e)
        }
    }
}

fn convert(cur: &Cursor<'_>, key: &str, raw: &RawValue) -> Result<AttrValue, ParseError> {
    let value = if raw.quoted {
        AttrValue::Text(raw.text.clone())
    } else if is_decimal(&raw.text) {
        let v: f64 = raw
            .text
            .parse()
            .map_err(|_| cur.error_at(raw.col, "invalid number"))?;
        if !v.is_finite() {
            return Err(cur.error_at(raw.col, "number out of range"));
        }
        AttrValue::Number(v)
    } else {
        match raw.text.as_str() {
            "true" => AttrValue::Bool(true),
            "false" => AttrValue::Bool(false),
            _ => AttrValue::Text(raw.text.clone()),
        }
    };
    if is_numeric_key(key) && value.as_number().is_none() {
        return Err(cur.error_at(
            raw.col,
            format!("'{key}' takes a plain number in canonical units"),
        ));
    }
    Ok(value)
}

fn parse_line(cur: &mut Cursor<'_>, tag_out: &mut Option<String>) -> Result<Item, ParseError> {
    let keyword = cur.take_while(|c| c.is_ascii_alphabetic());
    match keyword.text.as_str() {
        "node" => parse_node(cur, tag_out),
        "pipe" => parse_link(cur, EdgeKind::ProcessFlow),
        "signal" => parse_link(cur, EdgeKind::Signal),
        _ => Err(cur.error_at(keyword.col, "expected 'node', 'pipe', 'signal' or a '#' comment")),
    }
}

fn parse_node(cur: &mut Cursor<'_>, tag_out: &mut Option<String>) -> Result<Item, ParseError> {
    cur.require_ws("a node tag")?;
    let tag = cur.tag()?;
    *tag_out = Some(tag.text.clone());
    cur.end_of_token()?;
    cur.require_ws("'type=<kind>'")?;
    let kind_col = cur.col();
    if !cur.eat("type=") {
        return Err(cur.error("expected 'type=<kind>'"));
    }
    let kind_token = cur.take_while(|c| !c.is_whitespace());
    let kind = parse_kind(&kind_token.text).map_err(|m| cur.error_at(kind_col, m))?;

    let mut attrs = Attrs::new();
    let mut inlets = None;
    let mut outlets = None;
    let mut position = None;
    for (key, raw) in cur.attrs()? {
        match key.text.as_str() {
            "in" | "out" => {
                let count = raw
                    .text
                    .parse::<u32>()
                    .ok()
                    .filter(|n| !raw.quoted && *n <= MAX_DECLARED_NOZZLES)
                    .ok_or_else(|| {
                        cur.error_at(
                            raw.col,
                            format!("'{}' takes a nozzle count 0..={MAX_DECLARED_NOZZLES}", key.text),
                        )
                    })?;
                if key.text == "in" {
                    inlets = Some(count);
                } else {
                    outlets = Some(count);
                }
            }
            "pos" => position = Some(parse_position(&raw.text).map_err(|m| cur.error_at(raw.col, m))?),
            name => {
                attrs.insert(name.to_string(), convert(cur, name, &raw)?);
            }
        }
    }
    let (default_in, default_out) = kind.default_nozzle_counts();
    let node = Node {
        tag: tag.text.clone(),
        nozzles: Nozzle::numbered(inlets.unwrap_or(default_in), outlets.unwrap_or(default_out)),
        kind,
        position,
        attrs,
    };
    Ok(Item {
        line: cur.line,
        tag,
        decl: Declaration::Node(node),
    })
}

fn parse_kind(text: &str) -> Result<NodeKind, String> {
    if text.is_empty() {
        return Err("expected a kind after 'type='".into());
    }
    match text.parse::<NodeKind>() {
        Ok(NodeKind::Stream) => Err("kind 'stream' is reserved for generated nodes".into()),
        Ok(kind) => Ok(kind),
        Err(_) => Err(format!(
            "unknown kind '{text}'; expected tank, pump, valve, mixer, splitter, hx, instrument, \
             controller, source, sink or other:<name>"
        )),
    }
}

fn parse_position(text: &str) -> Result<Position, String> {
    let bad = || format!("invalid position '{text}'; expected doc:x,y[,z] or plant:x,y[,z]");
    let (frame, coords) = text.split_once(':').ok_or_else(bad)?;
    let frame = match frame {
        "doc" => Frame::Document,
        "plant" => Frame::Plant,
        _ => return Err(bad()),
    };
    let values = coords
        .split(',')
        .map(|c| {
            if is_decimal(c) {
                c.parse::<f64>().ok().filter(|v| v.is_finite())
            } else {
                None
            }
        })
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(bad)?;
    match values[..] {
        [x, y] => Ok(Position { frame, x, y, z: None }),
        [x, y, z] => Ok(Position {
            frame,
            x,
            y,
            z: Some(z),
        }),
        _ => Err(bad()),
    }
}

fn parse_link(cur: &mut Cursor<'_>, kind: EdgeKind) -> Result<Item, ParseError> {
    cur.require_ws("an edge tag")?;
    let tag = cur.tag()?;
    cur.skip_ws_then(":")?;
    cur.skip_ws();
    let (source, source_col) = match kind {
        EdgeKind::ProcessFlow => cur.endpoint()?,
        EdgeKind::Signal => {
            let t = cur.tag()?;
            (Endpoint::node(t.text), t.col)
        }
    };
    cur.skip_ws_then("->")?;
    cur.skip_ws();
    let (target, target_col) = match kind {
        EdgeKind::ProcessFlow => cur.endpoint()?,
        EdgeKind::Signal => {
            let t = cur.tag()?;
            (Endpoint::node(t.text), t.col)
        }
    };
    cur.end_of_token()?;
    let mut attrs = Attrs::new();
    for (key, raw) in cur.attrs()? {
        let value = convert(cur, &key.text, &raw)?;
        attrs.insert(key.text, value);
    }
    let edge = Edge {
        tag: tag.text.clone(),
        kind,
        source,
        target,
        attrs,
    };
    Ok(Item {
        line: cur.line,
        tag,
        decl: Declaration::Edge {
            edge,
            source_col,
            target_col,
        },
    })
}
