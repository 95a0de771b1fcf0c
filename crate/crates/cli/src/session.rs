//! The chart-parsing session service.
//!
//! [`Service::handle`] maps `(method, path, body)` to `(status, json)` with no
//! I/O of its own, so the HTTP server is a thin adapter and tests can replay
//! request transcripts directly. Session ids are issued in order (`s1`,
//! `s2`, ...), which makes responses a function of the request history.
//!
//! Every session sits behind its own mutex. The session map lock is held
//! only long enough to look a session up, so a long request on one session
//! never waits on another.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use lingkit::chart::{Chart, ChartError, ChartRuleKind, ChartSnapshot, EdgeId, Strategy};
use lingkit::grammar::parse_cfg;
use lingkit::text::{tokenize_whitespace, Subtree, Tree};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const API_PREFIX: &str = "/api/v1";

/// A named chart snapshot that sessions can be reset to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    #[serde(flatten)]
    pub snapshot: ChartSnapshot,
}

/// Parses and validates a presets file: a JSON array of named snapshots.
pub fn load_presets(text: &str) -> anyhow::Result<Vec<Preset>> {
    let presets: Vec<Preset> = serde_json::from_str(text)?;
    let mut names = BTreeSet::new();
    for p in &presets {
        if !names.insert(p.name.as_str()) {
            anyhow::bail!("duplicate preset name {:?}", p.name);
        }
        Chart::from_snapshot(&p.snapshot).map_err(|e| anyhow::anyhow!("preset {:?}: {e}", p.name))?;
    }
    Ok(presets)
}

#[derive(Debug)]
struct Session {
    /// Grammar text as supplied, echoed back in snapshots.
    grammar_text: String,
    chart: Chart,
    strategy: Strategy,
    /// Chart length before each mutating request; undo truncates to the last one.
    undo: Vec<usize>,
}

impl Session {
    fn snapshot(&self) -> ChartSnapshot {
        ChartSnapshot { grammar: self.grammar_text.clone(), ..self.chart.snapshot() }
    }

    fn records(&self, ids: impl IntoIterator<Item = EdgeId>) -> Vec<Value> {
        ids.into_iter().map(|id| json!(self.chart.edge_record(id).expect("edge just added"))).collect()
    }
}

pub type Response = (u16, Value);

fn error(status: u16, message: impl std::fmt::Display) -> Response {
    (status, json!({ "error": message.to_string() }))
}

fn ok(body: Value) -> Response {
    (200, body)
}

/// Compact JSON for trees: `{"node": "S", "children": [...]}`, with
/// `{"leaf": word}` and `{"hole": symbol}` children.
pub fn tree_json(tree: &Tree) -> Value {
    let children: Vec<Value> = tree
        .children
        .iter()
        .map(|c| match c {
            Subtree::Tree(t) => tree_json(t),
            Subtree::Leaf(tok) => json!({ "leaf": tok.text }),
            Subtree::Hole(sym) => json!({ "hole": sym }),
        })
        .collect();
    json!({ "node": tree.node, "children": children })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    grammar: String,
    sentence: String,
    #[serde(default)]
    strategy: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyRequest {
    rule: ChartRuleKind,
    #[serde(default)]
    edge_ids: Option<Vec<EdgeId>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyRequest {
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResetRequest {
    preset: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, Response> {
    let body = if body.trim().is_empty() { "{}" } else { body };
    serde_json::from_str(body).map_err(|e| error(400, format!("malformed body: {e}")))
}

fn parse_strategy(name: &str) -> Result<Strategy, Response> {
    name.parse().map_err(|e| error(400, e))
}

fn chart_error(e: ChartError) -> Response {
    match e {
        ChartError::UnknownEdgeId(_) => error(404, e),
        _ => error(400, e),
    }
}

#[derive(Default)]
pub struct Service {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: Mutex<u64>,
    presets: BTreeMap<String, ChartSnapshot>,
}

impl Service {
    pub fn new(presets: Vec<Preset>) -> Self {
        Service { presets: presets.into_iter().map(|p| (p.name, p.snapshot)).collect(), ..Default::default() }
    }

    /// Dispatches one request. `path` may carry a query string.
    pub fn handle(&self, method: &str, path: &str, body: &str) -> Response {
        let (path, query) = path.split_once('?').unwrap_or((path, ""));
        let Some(rest) = path.strip_prefix(API_PREFIX) else { return error(404, "not found") };
        let parts: Vec<&str> = rest.split('/').filter(|s| !s.is_empty()).collect();
        match (method, parts.as_slice()) {
            ("GET", ["presets"]) => ok(json!({ "presets": self.presets.keys().collect::<Vec<_>>() })),
            ("POST", ["sessions"]) => self.create(body),
            (_, ["sessions", id, action]) => {
                let Some(session) = self.sessions.read().unwrap().get(*id).cloned() else {
                    return error(404, format!("unknown session {id}"));
                };
                let mut session = session.lock().unwrap();
                self.session_request(&mut session, method, action, query, body)
            }
            _ => error(404, "not found"),
        }
    }

    fn create(&self, body: &str) -> Response {
        let req: CreateRequest = match parse_body(body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };
        let strategy = match req.strategy.as_deref().map(parse_strategy).transpose() {
            Ok(s) => s.unwrap_or(Strategy::TopDown),
            Err(resp) => return resp,
        };
        let grammar = match parse_cfg(&req.grammar) {
            Ok(g) => g,
            Err(e) => return error(400, e),
        };
        let chart = match Chart::new(Arc::new(grammar), tokenize_whitespace(&req.sentence, None)) {
            Ok(c) => c,
            Err(e) => return chart_error(e),
        };
        let id = {
            let mut next = self.next_id.lock().unwrap();
            *next += 1;
            format!("s{next}")
        };
        let session = Session { grammar_text: req.grammar, chart, strategy, undo: Vec::new() };
        self.sessions.write().unwrap().insert(id.clone(), Arc::new(Mutex::new(session)));
        (201, json!({ "id": id, "strategy": strategy.to_string() }))
    }

    fn session_request(&self, s: &mut Session, method: &str, action: &str, query: &str, body: &str) -> Response {
        let result = match (method, action) {
            ("GET", "chart") => Ok(ok(json!(s.snapshot()))),
            ("GET", "parses") => Ok(parses(s)),
            ("GET", "tree") => tree(s, query),
            ("POST", "step") => parse_body::<Empty>(body).map(|_| step(s)),
            ("POST", "apply") => parse_body::<ApplyRequest>(body).map(|req| apply(s, req)),
            ("POST", "strategy") => parse_body::<StrategyRequest>(body).and_then(|req| {
                s.strategy = parse_strategy(&req.name)?;
                Ok(ok(json!({ "strategy": s.strategy.to_string() })))
            }),
            ("POST", "reset") => parse_body::<ResetRequest>(body).map(|req| self.reset(s, &req.preset)),
            ("POST", "undo") => parse_body::<Empty>(body).map(|_| undo(s)),
            _ => Err(error(404, "not found")),
        };
        result.unwrap_or_else(|resp| resp)
    }

    fn reset(&self, s: &mut Session, preset: &str) -> Response {
        let Some(snapshot) = self.presets.get(preset) else {
            return error(409, format!("unknown preset {preset:?}"));
        };
        let chart = match Chart::from_snapshot(snapshot) {
            Ok(c) => c,
            Err(e) => return error(409, e),
        };
        s.grammar_text = snapshot.grammar.clone();
        s.chart = chart;
        s.undo.clear();
        ok(json!(s.snapshot()))
    }
}

fn parses(s: &Session) -> Response {
    let trees = s.chart.parses();
    ok(json!({
        "parses": trees.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "trees": trees.iter().map(tree_json).collect::<Vec<_>>(),
    }))
}

fn tree(s: &Session, query: &str) -> Result<Response, Response> {
    let edge = query
        .split('&')
        .find_map(|kv| kv.strip_prefix("edge="))
        .ok_or_else(|| error(400, "missing edge parameter"))?
        .parse::<EdgeId>()
        .map_err(|e| error(400, format!("bad edge parameter: {e}")))?;
    let t = s.chart.tree_for_edge(edge).map_err(chart_error)?;
    Ok(ok(json!({ "edge": edge, "bracketed": t.to_string(), "tree": tree_json(&t) })))
}

fn step(s: &mut Session) -> Response {
    let before = s.chart.len();
    match s.chart.step(s.strategy) {
        Some((rule, id)) => {
            s.undo.push(before);
            ok(json!({ "rule": rule, "new_edge": s.records([id])[0] }))
        }
        None => ok(json!({ "done": true })),
    }
}

fn apply(s: &mut Session, req: ApplyRequest) -> Response {
    let before = s.chart.len();
    let selected: Option<BTreeSet<EdgeId>> = req.edge_ids.map(|ids| ids.into_iter().collect());
    match s.chart.apply_rule(req.rule, selected.as_ref()) {
        Ok(ids) => {
            if !ids.is_empty() {
                s.undo.push(before);
            }
            ok(json!({ "rule": req.rule, "new_edges": s.records(ids) }))
        }
        Err(e) => chart_error(e),
    }
}

fn undo(s: &mut Session) -> Response {
    match s.undo.pop() {
        Some(len) => {
            let removed: Vec<EdgeId> = (len..s.chart.len()).collect();
            s.chart.truncate(len);
            ok(json!({ "removed": removed }))
        }
        None => ok(json!({ "removed": [] })),
    }
}
