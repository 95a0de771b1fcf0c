use std::fmt;

use crate::grammar::{Grammar, Production, Symbol};
use crate::text::{Subtree, TaggedToken, Tree};

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SrAction {
    Shift(String),
    Reduce(Production),
}

impl fmt::Display for SrAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SrAction::Shift(word) => write!(f, "Shift {word}"),
            SrAction::Reduce(p) => write!(f, "Reduce {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrTraceStep {
    pub action: SrAction,
    /// Stack contents after the action: node labels for trees, quoted words for tokens.
    pub stack_after: Vec<String>,
    /// Tokens not yet shifted.
    pub remaining: usize,
}

impl fmt::Display for SrTraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<28} [ {} ] remaining={}", self.action.to_string(), self.stack_after.join(" "), self.remaining)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrOutcome {
    pub tree: Option<Tree>,
    pub trace: Vec<SrTraceStep>,
}

fn stack_label(item: &Subtree) -> String {
    match item {
        Subtree::Leaf(tok) => Symbol::Terminal(tok.text.clone()).to_string(),
        other => other.label().to_owned(),
    }
}

fn matches(sym: &Symbol, item: &Subtree) -> bool {
    match (sym, item) {
        (Symbol::Terminal(w), Subtree::Leaf(tok)) => *w == tok.text,
        (Symbol::Nonterminal(nt), Subtree::Tree(t)) => *nt == t.node,
        _ => false,
    }
}

/// Greedy shift-reduce parsing.
///
/// After every action the parser reduces with the first production (in
/// grammar order) whose right-hand side matches the top of the stack, and
/// shifts only when nothing matches. It never backtracks, so it can miss
/// parses that exist; the trace shows where it went wrong.
pub fn sr_parse(grammar: &Grammar, tokens: &[TaggedToken]) -> Result<SrOutcome, ParseError> {
    if let Some(cycle) = grammar.unary_cycle() {
        return Err(ParseError::CyclicUnary(cycle));
    }
    let mut stack: Vec<Subtree> = Vec::new();
    let mut trace = Vec::new();
    let mut input = tokens.iter();
    let mut remaining = tokens.len();

    let record = |stack: &[Subtree], action: SrAction, remaining: usize, trace: &mut Vec<SrTraceStep>| {
        trace.push(SrTraceStep { action, stack_after: stack.iter().map(stack_label).collect(), remaining });
    };

    loop {
        let reducible = grammar.productions().iter().find(|p| {
            let k = p.rhs.len();
            k <= stack.len() && p.rhs.iter().zip(&stack[stack.len() - k..]).all(|(s, item)| matches(s, item))
        });
        if let Some(p) = reducible {
            let children = stack.split_off(stack.len() - p.rhs.len());
            stack.push(Subtree::Tree(Tree::new(p.lhs.clone(), children)));
            record(&stack, SrAction::Reduce(p.clone()), remaining, &mut trace);
            continue;
        }
        match input.next() {
            Some(tok) => {
                remaining -= 1;
                stack.push(Subtree::Leaf(tok.clone()));
                record(&stack, SrAction::Shift(tok.text.clone()), remaining, &mut trace);
            }
            None => break,
        }
    }

    let tree = match stack.as_slice() {
        [Subtree::Tree(t)] if t.node == grammar.start() => Some(t.clone()),
        _ => None,
    };
    Ok(SrOutcome { tree, trace })
}
