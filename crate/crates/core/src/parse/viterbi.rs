//! Most-probable parses for PCFGs.
//!
//! The dynamic program runs over dotted items rather than requiring Chomsky
//! normal form. For each span, from shortest to longest, it keeps the best
//! probability of:
//!
//! * every partial item `A -> X1..Xd • ...` covering the span, and
//! * every complete constituent `A` covering the span.
//!
//! An item with `d >= 2` symbols combines a shorter partial item with a
//! shorter constituent, so it only depends on finished spans. Unary rules
//! `A -> B` combine constituents over the same span and are relaxed until
//! nothing improves. Probabilities are multiplied left to right
//! (`p(rule) · p(child1) · p(child2) ...`), the same order
//! [`tree_probability`] uses, so the two agree exactly.

use std::collections::HashMap;

use crate::grammar::{PcfgGrammar, Symbol};
use crate::text::{Subtree, TaggedToken, Tree};

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTree {
    pub tree: Tree,
    pub prob: f64,
}

/// A parser that returns the single best parse under a PCFG.
pub trait ProbabilisticParser {
    fn best_parse(&self, grammar: &PcfgGrammar, tokens: &[TaggedToken]) -> Option<ScoredTree>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ViterbiParser;

impl ProbabilisticParser for ViterbiParser {
    fn best_parse(&self, grammar: &PcfgGrammar, tokens: &[TaggedToken]) -> Option<ScoredTree> {
        viterbi_parse(grammar, tokens)
    }
}

/// Candidates within this relative margin of the incumbent count as ties,
/// so rounding in the product order cannot override the first-found rule.
const TIE_MARGIN: f64 = 1e-12;

fn improves(cand: f64, incumbent: f64) -> bool {
    cand > incumbent * (1.0 + TIE_MARGIN)
}

#[derive(Debug, Clone)]
struct Best {
    prob: f64,
    production: usize,
    /// Span boundaries: child `m` covers `bounds[m]..bounds[m + 1]`.
    bounds: Vec<usize>,
}

struct Table<'a> {
    grammar: &'a PcfgGrammar,
    tokens: &'a [TaggedToken],
    complete: HashMap<(usize, usize, &'a str), Best>,
    partial: HashMap<(usize, usize, usize, usize), Best>,
}

impl<'a> Table<'a> {
    fn symbol_prob(&self, sym: &'a Symbol, i: usize, j: usize) -> Option<f64> {
        match sym {
            Symbol::Terminal(w) => (j == i + 1 && self.tokens[i].text == *w).then_some(1.0),
            Symbol::Nonterminal(nt) => self.complete.get(&(i, j, nt.as_str())).map(|b| b.prob),
        }
    }

    fn offer_complete(&mut self, i: usize, j: usize, lhs: &'a str, cand: Best) -> bool {
        match self.complete.get(&(i, j, lhs)) {
            Some(best) if !improves(cand.prob, best.prob) => false,
            _ => {
                self.complete.insert((i, j, lhs), cand);
                true
            }
        }
    }

    fn offer_partial(&mut self, key: (usize, usize, usize, usize), cand: Best) {
        if self.partial.get(&key).is_none_or(|b| improves(cand.prob, b.prob)) {
            self.partial.insert(key, cand);
        }
    }

    fn fill_span(&mut self, i: usize, j: usize) {
        let g = self.grammar.grammar();
        // Items whose last symbol starts strictly inside the span.
        for (p, prod) in g.productions().iter().enumerate() {
            let r = prod.rhs.len();
            for d in 2..=r {
                for k in i + 1..j {
                    let Some(prev) = self.partial.get(&(i, k, p, d - 1)) else { continue };
                    let Some(last) = self.symbol_prob(&prod.rhs[d - 1], k, j) else { continue };
                    let mut bounds = prev.bounds.clone();
                    bounds.push(j);
                    let cand = Best { prob: prev.prob * last, production: p, bounds };
                    if d == r {
                        self.offer_complete(i, j, &prod.lhs, cand);
                    } else {
                        self.offer_partial((i, j, p, d), cand);
                    }
                }
            }
        }
        // Single-symbol productions over the whole span, relaxed to a fixpoint.
        loop {
            let mut changed = false;
            for (p, prod) in g.productions().iter().enumerate() {
                if prod.rhs.len() != 1 {
                    continue;
                }
                if let Some(child) = self.symbol_prob(&prod.rhs[0], i, j) {
                    let cand = Best { prob: self.grammar.prob(p) * child, production: p, bounds: vec![i, j] };
                    changed |= self.offer_complete(i, j, &prod.lhs, cand);
                }
            }
            if !changed {
                break;
            }
        }
        // First symbol of a longer production covering the span.
        for (p, prod) in g.productions().iter().enumerate() {
            if prod.rhs.len() < 2 {
                continue;
            }
            if let Some(first) = self.symbol_prob(&prod.rhs[0], i, j) {
                let cand = Best { prob: self.grammar.prob(p) * first, production: p, bounds: vec![i, j] };
                self.offer_partial((i, j, p, 1), cand);
            }
        }
    }

    fn build(&self, i: usize, j: usize, lhs: &str) -> Tree {
        let best = &self.complete[&(i, j, lhs)];
        let prod = self.grammar.grammar().production(best.production);
        let children = prod
            .rhs
            .iter()
            .zip(best.bounds.windows(2))
            .map(|(sym, w)| match sym {
                Symbol::Terminal(_) => Subtree::Leaf(self.tokens[w[0]].clone()),
                Symbol::Nonterminal(nt) => Subtree::Tree(self.build(w[0], w[1], nt)),
            })
            .collect();
        Tree::new(lhs, children)
    }
}

/// The maximum-probability parse, or `None` if the sentence has no parse.
/// Ties keep the first derivation found.
pub fn viterbi_parse(grammar: &PcfgGrammar, tokens: &[TaggedToken]) -> Option<ScoredTree> {
    let n = tokens.len();
    if n == 0 {
        return None;
    }
    let mut table = Table { grammar, tokens, complete: HashMap::new(), partial: HashMap::new() };
    for len in 1..=n {
        for i in 0..=n - len {
            table.fill_span(i, i + len);
        }
    }
    let best = table.complete.get(&(0, n, grammar.start()))?;
    Some(ScoredTree { prob: best.prob, tree: table.build(0, n, grammar.start()) })
}

/// Product of the probabilities of every production used in `tree`.
pub fn tree_probability(grammar: &PcfgGrammar, tree: &Tree) -> Result<f64, ParseError> {
    let rhs = tree
        .children
        .iter()
        .map(|c| match c {
            Subtree::Tree(t) => Ok(Symbol::Nonterminal(t.node.clone())),
            Subtree::Leaf(tok) => Ok(Symbol::Terminal(tok.text.clone())),
            Subtree::Hole(_) => Err(ParseError::UnknownProduction(tree.node.clone())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let g = grammar.grammar();
    let index = g
        .expansions(&tree.node)
        .iter()
        .copied()
        .find(|&p| g.production(p).rhs == rhs)
        .ok_or_else(|| ParseError::UnknownProduction(tree.node.clone()))?;
    let mut prob = grammar.prob(index);
    for child in &tree.children {
        if let Subtree::Tree(t) = child {
            prob *= tree_probability(grammar, t)?;
        }
    }
    Ok(prob)
}
