//! Chart parsing with individually applicable rules.
//!
//! A chart records hypotheses about constituents as edges: a dotted
//! production plus the span of tokens it covers so far. Rules add edges:
//!
//! | rule              | adds                                                                 |
//! |-------------------|----------------------------------------------------------------------|
//! | `TopDownInit`     | `[0,0] S -> • α` for every start production                          |
//! | `LexicalInsert`   | `[k,k+1] A -> 'w' •` for every token `w` and lexical production      |
//! | `TopDownPredict`  | `[j,j] B -> • γ` for every `[i,j] A -> α • B β`                      |
//! | `BottomUpPredict` | `[i,i] A -> • B δ` for every complete `[i,j] B -> γ •`               |
//! | `Fundamental`     | `[i,k] A -> α X • β` from `[i,j] A -> α • X β` and complete `[j,k] X` |
//!
//! The fundamental rule also steps over a terminal after the dot when the
//! next token matches it, and bottom-up prediction also predicts productions
//! whose right-hand side starts with a terminal matching some token.
//!
//! Edges remember which child edges they consumed, and the child list is part
//! of an edge's identity. Each distinct derivation of a constituent is its own
//! edge, so every parse can be read straight off the chart.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{parse_cfg, Grammar, GrammarError, Production, Symbol};
use crate::text::{tokenize_whitespace, Location, Subtree, TaggedToken, Tree};

pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("no grammar terminal covers: {}", .0.iter().cloned().collect::<Vec<_>>().join(", "))]
    UncoveredTokens(BTreeSet<String>),
    #[error("cyclic unary productions: {}", .0.join(" -> "))]
    CyclicUnary(Vec<String>),
    #[error("unknown edge id {0}")]
    UnknownEdgeId(EdgeId),
    #[error("invalid chart snapshot: {0}")]
    InvalidSnapshot(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChartRuleKind {
    TopDownInit,
    TopDownPredict,
    BottomUpPredict,
    Fundamental,
    LexicalInsert,
}

impl ChartRuleKind {
    pub const ALL: [ChartRuleKind; 5] = [
        ChartRuleKind::TopDownInit,
        ChartRuleKind::TopDownPredict,
        ChartRuleKind::BottomUpPredict,
        ChartRuleKind::Fundamental,
        ChartRuleKind::LexicalInsert,
    ];
}

impl fmt::Display for ChartRuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ChartRuleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChartRuleKind::ALL.into_iter().find(|k| k.to_string() == s).ok_or_else(|| format!("unknown chart rule '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    TopDown,
    BottomUp,
}

impl Strategy {
    /// The rule ordering the stepper tries, highest priority first.
    pub fn rules(self) -> &'static [ChartRuleKind] {
        use ChartRuleKind::*;
        match self {
            Strategy::TopDown => &[TopDownInit, LexicalInsert, TopDownPredict, Fundamental],
            Strategy::BottomUp => &[LexicalInsert, BottomUpPredict, Fundamental],
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TopDown" | "td" | "top-down" => Ok(Strategy::TopDown),
            "BottomUp" | "bu" | "bottom-up" => Ok(Strategy::BottomUp),
            _ => Err(format!("unknown strategy '{s}'")),
        }
    }
}

/// What an edge consumed for one right-hand-side symbol before its dot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChildRef {
    Edge(EdgeId),
    Token { token: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    /// Index of the production in the chart's grammar.
    pub production: usize,
    pub dot: usize,
    pub children: Vec<ChildRef>,
}

impl Edge {
    fn predicted(at: usize, production: usize) -> Self {
        Edge { start: at, end: at, production, dot: 0, children: Vec::new() }
    }

    fn advance(&self, end: usize, child: ChildRef) -> Self {
        let mut children = self.children.clone();
        children.push(child);
        Edge { start: self.start, end, production: self.production, dot: self.dot + 1, children }
    }
}

/// Serialized form of one edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub i: usize,
    pub j: usize,
    pub lhs: String,
    pub rhs: Vec<String>,
    pub dot: usize,
    pub children: Vec<ChildRef>,
}

/// A chart as stored in preset files and returned by the session API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSnapshot {
    pub grammar: String,
    pub tokens: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    grammar: Arc<Grammar>,
    tokens: Vec<TaggedToken>,
    edges: Vec<Edge>,
    ids: HashMap<Edge, EdgeId>,
    /// complete edges by (start, lhs)
    complete_at: HashMap<(usize, String), Vec<EdgeId>>,
    /// incomplete edges by (end, next nonterminal)
    waiting_at: HashMap<(usize, String), Vec<EdgeId>>,
}

/// Which existing edges may trigger a rule application.
#[derive(Clone, Copy)]
enum Trigger<'a> {
    All,
    Selected(&'a BTreeSet<EdgeId>),
}

impl Trigger<'_> {
    fn one(&self, id: EdgeId) -> bool {
        match self {
            Trigger::All => true,
            Trigger::Selected(sel) => sel.contains(&id),
        }
    }

    /// A lone selected edge pairs with anything in the chart; a larger
    /// selection only pairs its own members.
    fn pair(&self, a: EdgeId, b: EdgeId) -> bool {
        match self {
            Trigger::All => true,
            Trigger::Selected(sel) if sel.len() == 1 => sel.contains(&a) || sel.contains(&b),
            Trigger::Selected(sel) => sel.contains(&a) && sel.contains(&b),
        }
    }

    fn is_all(&self) -> bool {
        matches!(self, Trigger::All)
    }
}

impl Chart {
    /// An empty chart over `tokens`. Every token must be a grammar terminal.
    pub fn new(grammar: Arc<Grammar>, tokens: Vec<TaggedToken>) -> Result<Self, ChartError> {
        let uncovered = grammar.check_coverage(&tokens);
        if !uncovered.is_empty() {
            return Err(ChartError::UncoveredTokens(uncovered));
        }
        if let Some(cycle) = grammar.unary_cycle() {
            return Err(ChartError::CyclicUnary(cycle));
        }
        Ok(Chart { grammar, tokens, edges: Vec::new(), ids: HashMap::new(), complete_at: HashMap::new(), waiting_at: HashMap::new() })
    }

    pub fn from_sentence(grammar: &Grammar, sentence: &str) -> Result<Self, ChartError> {
        Chart::new(Arc::new(grammar.clone()), tokenize_whitespace(sentence, None))
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn tokens(&self) -> &[TaggedToken] {
        &self.tokens
    }

    /// Sentence length.
    pub fn n(&self) -> usize {
        self.tokens.len()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge, ChartError> {
        self.edges.get(id).ok_or(ChartError::UnknownEdgeId(id))
    }

    /// Edges in insertion order; an edge's id is its index.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, edge: &Edge) -> bool {
        self.ids.contains_key(edge)
    }

    pub fn production(&self, edge: &Edge) -> &Production {
        self.grammar.production(edge.production)
    }

    pub fn lhs(&self, edge: &Edge) -> &str {
        &self.production(edge).lhs
    }

    pub fn is_complete(&self, edge: &Edge) -> bool {
        edge.dot == self.production(edge).rhs.len()
    }

    pub fn next_symbol(&self, edge: &Edge) -> Option<&Symbol> {
        self.production(edge).rhs.get(edge.dot)
    }

    fn token_text(&self, k: usize) -> Option<&str> {
        self.tokens.get(k).map(|t| t.text.as_str())
    }

    /// Adds an edge unless it is already present. Returns the id of a new edge.
    fn insert(&mut self, edge: Edge) -> Option<EdgeId> {
        if self.ids.contains_key(&edge) {
            return None;
        }
        let id = self.edges.len();
        self.index(&edge, id);
        self.ids.insert(edge.clone(), id);
        self.edges.push(edge);
        Some(id)
    }

    fn index(&mut self, edge: &Edge, id: EdgeId) {
        let prod = self.grammar.production(edge.production);
        match prod.rhs.get(edge.dot) {
            None => self.complete_at.entry((edge.start, prod.lhs.clone())).or_default().push(id),
            Some(Symbol::Nonterminal(nt)) => self.waiting_at.entry((edge.end, nt.clone())).or_default().push(id),
            Some(Symbol::Terminal(_)) => {}
        }
    }

    /// Drops every edge with id `>= len`. Used to undo steps, since rules
    /// themselves only ever add edges.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.edges.len() {
            return;
        }
        for edge in self.edges.drain(len..) {
            self.ids.remove(&edge);
        }
        self.complete_at.clear();
        self.waiting_at.clear();
        for id in 0..self.edges.len() {
            let edge = self.edges[id].clone();
            self.index(&edge, id);
        }
    }

    /// Enumerates what `kind` would produce from the current chart, in
    /// deterministic order, including edges that are already present.
    fn for_each_candidate(&self, kind: ChartRuleKind, trigger: Trigger<'_>, f: &mut dyn FnMut(Edge) -> ControlFlow<()>) -> ControlFlow<()> {
        let g = &*self.grammar;
        match kind {
            ChartRuleKind::TopDownInit => {
                for &p in g.expansions(g.start()) {
                    f(Edge::predicted(0, p))?;
                }
            }
            ChartRuleKind::LexicalInsert => {
                for (k, tok) in self.tokens.iter().enumerate() {
                    for (p, prod) in g.productions().iter().enumerate() {
                        if prod.is_lexical() && prod.rhs[0].matches_token(&tok.text) {
                            let edge = Edge { start: k, end: k + 1, production: p, dot: 1, children: vec![ChildRef::Token { token: k }] };
                            f(edge)?;
                        }
                    }
                }
            }
            ChartRuleKind::TopDownPredict => {
                for (id, edge) in self.edges.iter().enumerate() {
                    if !trigger.one(id) {
                        continue;
                    }
                    if let Some(Symbol::Nonterminal(nt)) = self.next_symbol(edge) {
                        for &p in g.expansions(nt) {
                            f(Edge::predicted(edge.end, p))?;
                        }
                    }
                }
            }
            ChartRuleKind::BottomUpPredict => {
                if trigger.is_all() {
                    let mut seeds = Vec::new();
                    self.token_predictions(&mut seeds);
                    for e in seeds {
                        f(e)?;
                    }
                }
                for (id, edge) in self.edges.iter().enumerate() {
                    if !trigger.one(id) || !self.is_complete(edge) {
                        continue;
                    }
                    let lhs = self.lhs(edge);
                    for (p, prod) in g.productions().iter().enumerate() {
                        if matches!(&prod.rhs[0], Symbol::Nonterminal(nt) if nt == lhs) {
                            f(Edge::predicted(edge.start, p))?;
                        }
                    }
                }
            }
            ChartRuleKind::Fundamental => {
                for (id, edge) in self.edges.iter().enumerate() {
                    match self.next_symbol(edge) {
                        Some(Symbol::Terminal(w)) => {
                            if trigger.one(id) && self.token_text(edge.end) == Some(w.as_str()) {
                                f(edge.advance(edge.end + 1, ChildRef::Token { token: edge.end }))?;
                            }
                        }
                        Some(Symbol::Nonterminal(nt)) => {
                            let key = (edge.end, nt.clone());
                            for &cid in self.complete_at.get(&key).into_iter().flatten() {
                                if trigger.pair(id, cid) {
                                    f(edge.advance(self.edges[cid].end, ChildRef::Edge(cid)))?;
                                }
                            }
                        }
                        None => {}
                    }
                }
            }
        }
        ControlFlow::Continue(())
    }

    /// Applies one rule to the chart as it currently stands and returns the
    /// ids of the edges it added. With `selected`, only those edges trigger
    /// the rule; `TopDownInit` and `LexicalInsert` ignore the selection.
    pub fn apply_rule(&mut self, kind: ChartRuleKind, selected: Option<&BTreeSet<EdgeId>>) -> Result<Vec<EdgeId>, ChartError> {
        if let Some(sel) = selected {
            if let Some(&bad) = sel.iter().find(|&&id| id >= self.edges.len()) {
                return Err(ChartError::UnknownEdgeId(bad));
            }
        }
        let trigger = selected.map_or(Trigger::All, Trigger::Selected);
        let mut found = Vec::new();
        let _ = self.for_each_candidate(kind, trigger, &mut |e| {
            found.push(e);
            ControlFlow::Continue(())
        });
        Ok(found.into_iter().filter_map(|e| self.insert(e)).collect())
    }

    /// Adds exactly one edge: the first new edge produced by the strategy's
    /// rules, tried in order. `None` once the chart is closed under the strategy.
    pub fn step(&mut self, strategy: Strategy) -> Option<(ChartRuleKind, EdgeId)> {
        for &kind in strategy.rules() {
            let mut fresh = None;
            let _ = self.for_each_candidate(kind, Trigger::All, &mut |e| {
                if self.ids.contains_key(&e) {
                    ControlFlow::Continue(())
                } else {
                    fresh = Some(e);
                    ControlFlow::Break(())
                }
            });
            if let Some(edge) = fresh {
                let id = self.insert(edge).expect("candidate was checked to be new");
                return Some((kind, id));
            }
        }
        None
    }

    /// Runs the strategy to its fixpoint using an agenda, which reaches the
    /// same edge set as repeated [`Chart::step`] calls far faster. Returns the
    /// number of edges added.
    pub fn close(&mut self, strategy: Strategy) -> usize {
        let rules = strategy.rules();
        let before = self.edges.len();
        let mut agenda: VecDeque<EdgeId> = (0..self.edges.len()).collect();

        for &kind in rules {
            let mut seeds = Vec::new();
            match kind {
                ChartRuleKind::TopDownInit | ChartRuleKind::LexicalInsert => {
                    let _ = self.for_each_candidate(kind, Trigger::All, &mut |e| {
                        seeds.push(e);
                        ControlFlow::Continue(())
                    });
                }
                // the edge-triggered half of bottom-up prediction runs per edge below
                ChartRuleKind::BottomUpPredict => self.token_predictions(&mut seeds),
                _ => {}
            }
            agenda.extend(seeds.into_iter().filter_map(|e| self.insert(e)));
        }

        let td_predict = rules.contains(&ChartRuleKind::TopDownPredict);
        let bu_predict = rules.contains(&ChartRuleKind::BottomUpPredict);
        let fundamental = rules.contains(&ChartRuleKind::Fundamental);

        while let Some(id) = agenda.pop_front() {
            let edge = self.edges[id].clone();
            let mut produced = Vec::new();
            let g = Arc::clone(&self.grammar);
            let prod = g.production(edge.production);
            match prod.rhs.get(edge.dot) {
                None => {
                    if bu_predict {
                        for (p, other) in g.productions().iter().enumerate() {
                            if matches!(&other.rhs[0], Symbol::Nonterminal(nt) if *nt == prod.lhs) {
                                produced.push(Edge::predicted(edge.start, p));
                            }
                        }
                    }
                    if fundamental {
                        let key = (edge.start, prod.lhs.clone());
                        for &wid in self.waiting_at.get(&key).into_iter().flatten() {
                            produced.push(self.edges[wid].advance(edge.end, ChildRef::Edge(id)));
                        }
                    }
                }
                Some(Symbol::Nonterminal(nt)) => {
                    if td_predict {
                        produced.extend(g.expansions(nt).iter().map(|&p| Edge::predicted(edge.end, p)));
                    }
                    if fundamental {
                        let key = (edge.end, nt.clone());
                        for &cid in self.complete_at.get(&key).into_iter().flatten() {
                            produced.push(edge.advance(self.edges[cid].end, ChildRef::Edge(cid)));
                        }
                    }
                }
                Some(Symbol::Terminal(w)) => {
                    if fundamental && self.token_text(edge.end) == Some(w.as_str()) {
                        produced.push(edge.advance(edge.end + 1, ChildRef::Token { token: edge.end }));
                    }
                }
            }
            agenda.extend(produced.into_iter().filter_map(|e| self.insert(e)));
        }
        self.edges.len() - before
    }

    fn token_predictions(&self, out: &mut Vec<Edge>) {
        for (k, tok) in self.tokens.iter().enumerate() {
            for (p, prod) in self.grammar.productions().iter().enumerate() {
                if prod.rhs.len() > 1 && prod.rhs[0].matches_token(&tok.text) {
                    out.push(Edge::predicted(k, p));
                }
            }
        }
    }

    fn subtree(&self, child: ChildRef) -> Subtree {
        match child {
            ChildRef::Edge(id) => Subtree::Tree(self.build_tree(&self.edges[id])),
            ChildRef::Token { token } => Subtree::Leaf(self.tokens[token].clone()),
        }
    }

    fn build_tree(&self, edge: &Edge) -> Tree {
        let prod = self.production(edge);
        let mut children: Vec<Subtree> = edge.children.iter().map(|&c| self.subtree(c)).collect();
        children.extend(prod.rhs[edge.dot..].iter().map(|s| Subtree::Hole(s.to_string())));
        Tree::new(prod.lhs.clone(), children)
    }

    /// The (possibly partial) tree for an edge; symbols after the dot appear as holes.
    pub fn tree_for_edge(&self, id: EdgeId) -> Result<Tree, ChartError> {
        Ok(self.build_tree(self.edge(id)?))
    }

    /// One tree per complete start-symbol edge spanning the whole sentence.
    pub fn parses(&self) -> Vec<Tree> {
        let n = self.n();
        let key = (0, self.grammar.start().to_owned());
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &id in self.complete_at.get(&key).into_iter().flatten() {
            if self.edges[id].end == n {
                let tree = self.build_tree(&self.edges[id]);
                if seen.insert(tree.clone()) {
                    out.push(tree);
                }
            }
        }
        out
    }

    pub fn edge_record(&self, id: EdgeId) -> Result<EdgeRecord, ChartError> {
        let edge = self.edge(id)?;
        let prod = self.production(edge);
        Ok(EdgeRecord {
            id,
            i: edge.start,
            j: edge.end,
            lhs: prod.lhs.clone(),
            rhs: prod.rhs.iter().map(ToString::to_string).collect(),
            dot: edge.dot,
            children: edge.children.clone(),
        })
    }

    /// Snapshot with the grammar rendered in canonical text form.
    pub fn snapshot(&self) -> ChartSnapshot {
        ChartSnapshot {
            grammar: self.grammar.to_string(),
            tokens: self.tokens.iter().map(|t| t.text.clone()).collect(),
            edges: (0..self.edges.len()).map(|id| self.edge_record(id).expect("id in range")).collect(),
        }
    }

    /// Rebuilds a chart from a snapshot, checking every edge against the
    /// grammar, the sentence and its children.
    pub fn from_snapshot(snapshot: &ChartSnapshot) -> Result<Self, ChartError> {
        let grammar = parse_cfg(&snapshot.grammar)?;
        let tokens: Vec<TaggedToken> = snapshot
            .tokens
            .iter()
            .enumerate()
            .map(|(k, w)| {
                if w.is_empty() || w.contains(char::is_whitespace) {
                    Err(ChartError::InvalidSnapshot(format!("bad token {w:?}")))
                } else {
                    Ok(TaggedToken::new(w.as_str(), None, Location::new(k, k + 1)))
                }
            })
            .collect::<Result<_, _>>()?;
        let mut chart = Chart::new(Arc::new(grammar), tokens)?;
        for record in &snapshot.edges {
            let edge = chart.validate_record(record)?;
            if chart.insert(edge).is_none() {
                return Err(ChartError::InvalidSnapshot(format!("edge {} is a duplicate", record.id)));
            }
        }
        Ok(chart)
    }

    fn validate_record(&self, r: &EdgeRecord) -> Result<Edge, ChartError> {
        let bad = |msg: String| ChartError::InvalidSnapshot(format!("edge {}: {msg}", r.id));
        if r.id != self.edges.len() {
            return Err(bad(format!("expected id {}", self.edges.len())));
        }
        let rhs: Vec<Symbol> = r.rhs.iter().map(|s| Symbol::parse(s).ok_or_else(|| bad(format!("bad symbol {s:?}")))).collect::<Result<_, _>>()?;
        let production =
            self.grammar.index_of(&Production::new(r.lhs.clone(), rhs.clone())).ok_or_else(|| bad("production not in grammar".into()))?;
        if r.dot > rhs.len() || r.children.len() != r.dot || r.i > r.j || r.j > self.n() {
            return Err(bad("inconsistent dot, children or span".into()));
        }
        let mut pos = r.i;
        for (sym, child) in rhs.iter().zip(&r.children) {
            match (sym, *child) {
                (Symbol::Terminal(w), ChildRef::Token { token }) if token == pos && self.token_text(pos) == Some(w.as_str()) => {
                    pos += 1;
                }
                (Symbol::Nonterminal(nt), ChildRef::Edge(cid)) if cid < self.edges.len() => {
                    let c = &self.edges[cid];
                    if c.start != pos || !self.is_complete(c) || self.lhs(c) != nt {
                        return Err(bad(format!("child {cid} does not fit")));
                    }
                    pos = c.end;
                }
                _ => return Err(bad("child does not match right-hand side".into())),
            }
        }
        if pos != r.j {
            return Err(bad("children do not cover the span".into()));
        }
        Ok(Edge { start: r.i, end: r.j, production, dot: r.dot, children: r.children.clone() })
    }
}

/// Convenience wrapper: parse a whitespace-tokenized sentence to fixpoint and return all trees.
pub fn parse_sentence(grammar: &Grammar, sentence: &str, strategy: Strategy) -> Result<Vec<Tree>, ChartError> {
    let mut chart = Chart::from_sentence(grammar, sentence)?;
    chart.close(strategy);
    Ok(chart.parses())
}
