//! Context-free grammars and their probabilistic extension.
//!
//! Grammar files hold one rule per line:
//!
//! ```text
//! # comments start with '#'
//! S  -> NP VP
//! NP -> 'I' | Det N
//! VP -> 'eats' NP
//! ```
//!
//! Quoted symbols are terminals, bare symbols are nonterminals, and the
//! left-hand side of the first rule is the start symbol. Probabilistic
//! grammars append `[p]` to every alternative; the probabilities for each
//! left-hand side must sum to one within [`PCFG_TOLERANCE`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::text::TaggedToken;

pub const PCFG_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("syntax error on line {line}: {message}")]
    GrammarSyntax { line: usize, message: String },
    #[error("invalid production on line {line}: terminal on left-hand side")]
    InvalidProduction { line: usize },
    #[error("nonterminal {symbol} is used but never defined")]
    UndefinedSymbol { symbol: String },
    #[error("grammar has no productions")]
    EmptyGrammar,
    #[error("probability on line {line} is outside (0, 1]")]
    InvalidProbability { line: usize },
    #[error("probabilities for {lhs} sum to {sum}, not 1")]
    NotNormalized { lhs: String, sum: f64 },
}

impl GrammarError {
    fn syntax(line: usize, message: impl Into<String>) -> Self {
        GrammarError::GrammarSyntax { line, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(String),
    Nonterminal(String),
}

impl Symbol {
    pub fn name(&self) -> &str {
        match self {
            Symbol::Terminal(s) | Symbol::Nonterminal(s) => s,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Symbol::Terminal(_))
    }

    pub fn matches_token(&self, token: &str) -> bool {
        matches!(self, Symbol::Terminal(w) if w == token)
    }

    /// Parses the rendered form produced by `Display`: quoted means terminal.
    pub fn parse(s: &str) -> Option<Symbol> {
        let quoted = |q: char| s.len() >= 2 && s.starts_with(q) && s.ends_with(q);
        if quoted('\'') || quoted('"') {
            Some(Symbol::Terminal(s[1..s.len() - 1].to_owned()))
        } else if !s.is_empty() && !s.contains(char::is_whitespace) {
            Some(Symbol::Nonterminal(s.to_owned()))
        } else {
            None
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Nonterminal(s) => f.write_str(s),
            Symbol::Terminal(w) if w.contains('\'') => write!(f, "\"{w}\""),
            Symbol::Terminal(w) => write!(f, "'{w}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl Production {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Symbol>) -> Self {
        Production { lhs: lhs.into(), rhs }
    }

    /// A single-terminal production such as `NP -> 'I'`.
    pub fn is_lexical(&self) -> bool {
        self.rhs.len() == 1 && self.rhs[0].is_terminal()
    }

    /// `A -> B` with a single nonterminal on the right.
    pub fn is_unary(&self) -> bool {
        self.rhs.len() == 1 && !self.rhs[0].is_terminal()
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        for sym in &self.rhs {
            write!(f, " {sym}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    start: String,
    productions: Vec<Production>,
    by_lhs: HashMap<String, Vec<usize>>,
}

impl Grammar {
    /// Builds a grammar, checking that every nonterminal on a right-hand side is defined.
    pub fn new(start: impl Into<String>, productions: Vec<Production>) -> Result<Self, GrammarError> {
        if productions.is_empty() {
            return Err(GrammarError::EmptyGrammar);
        }
        let mut by_lhs: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, p) in productions.iter().enumerate() {
            by_lhs.entry(p.lhs.clone()).or_default().push(i);
        }
        let start = start.into();
        if !by_lhs.contains_key(&start) {
            return Err(GrammarError::UndefinedSymbol { symbol: start });
        }
        for p in &productions {
            for sym in &p.rhs {
                if let Symbol::Nonterminal(nt) = sym {
                    if !by_lhs.contains_key(nt) {
                        return Err(GrammarError::UndefinedSymbol { symbol: nt.clone() });
                    }
                }
            }
        }
        Ok(Grammar { start, productions, by_lhs })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, index: usize) -> &Production {
        &self.productions[index]
    }

    /// Indices of productions with the given left-hand side, in file order.
    pub fn expansions(&self, lhs: &str) -> &[usize] {
        self.by_lhs.get(lhs).map_or(&[], Vec::as_slice)
    }

    pub fn index_of(&self, production: &Production) -> Option<usize> {
        self.expansions(&production.lhs).iter().copied().find(|&i| self.productions[i] == *production)
    }

    pub fn is_nonterminal(&self, symbol: &str) -> bool {
        self.by_lhs.contains_key(symbol)
    }

    pub fn terminals(&self) -> BTreeSet<&str> {
        self.productions.iter().flat_map(|p| p.rhs.iter()).filter(|s| s.is_terminal()).map(Symbol::name).collect()
    }

    /// Token texts that appear nowhere as a terminal in the grammar.
    pub fn check_coverage(&self, tokens: &[TaggedToken]) -> BTreeSet<String> {
        let known = self.terminals();
        tokens.iter().filter(|t| !known.contains(t.text.as_str())).map(|t| t.text.clone()).collect()
    }

    /// A cycle of unary productions `A -> B -> ... -> A`, if one exists.
    ///
    /// Such cycles give a constituent infinitely many derivations.
    pub fn unary_cycle(&self) -> Option<Vec<String>> {
        let mut graph: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for p in self.productions.iter().filter(|p| p.is_unary()) {
            graph.entry(p.lhs.as_str()).or_default().push(p.rhs[0].name());
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: HashMap<&str, u8> = HashMap::new();
        let mut path = Vec::new();

        fn visit<'a>(
            node: &'a str,
            graph: &BTreeMap<&'a str, Vec<&'a str>>,
            state: &mut HashMap<&'a str, u8>,
            path: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            state.insert(node, 1);
            path.push(node);
            for &next in graph.get(node).into_iter().flatten() {
                match state.get(next).copied().unwrap_or(0) {
                    1 => {
                        let from = path.iter().position(|&n| n == next).unwrap();
                        let mut cycle: Vec<String> = path[from..].iter().map(|s| s.to_string()).collect();
                        cycle.push(next.to_string());
                        return Some(cycle);
                    }
                    0 => {
                        if let Some(c) = visit(next, graph, state, path) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            path.pop();
            state.insert(node, 2);
            None
        }

        let nodes: Vec<&str> = graph.keys().copied().collect();
        for node in nodes {
            if state.get(node).copied().unwrap_or(0) == 0 {
                if let Some(c) = visit(node, &graph, &mut state, &mut path) {
                    return Some(c);
                }
            }
        }
        None
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.productions {
            writeln!(f, "{p}")?;
        }
        Ok(())
    }
}

/// A context-free grammar whose productions carry probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PcfgGrammar {
    grammar: Grammar,
    probs: Vec<f64>,
}

impl PcfgGrammar {
    pub fn new(grammar: Grammar, probs: Vec<f64>) -> Result<Self, GrammarError> {
        assert_eq!(grammar.productions().len(), probs.len());
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(GrammarError::InvalidProbability { line: i + 1 });
        }
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        for (p, &prob) in grammar.productions().iter().zip(&probs) {
            *sums.entry(p.lhs.as_str()).or_insert(0.0) += prob;
        }
        if let Some((lhs, sum)) = sums.into_iter().find(|(_, s)| (s - 1.0).abs() > PCFG_TOLERANCE) {
            return Err(GrammarError::NotNormalized { lhs: lhs.to_owned(), sum });
        }
        Ok(PcfgGrammar { grammar, probs })
    }

    /// The underlying grammar without probabilities.
    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn start(&self) -> &str {
        self.grammar.start()
    }

    pub fn productions(&self) -> impl Iterator<Item = (&Production, f64)> {
        self.grammar.productions().iter().zip(self.probs.iter().copied())
    }
}

impl fmt::Display for PcfgGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, prob) in self.productions() {
            writeln!(f, "{p} [{prob}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Arrow,
    Bar,
    Sym(Symbol),
    Prob(String),
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Lexeme>, GrammarError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => break,
            '|' => {
                chars.next();
                out.push(Lexeme::Bar);
            }
            '-' if line[i..].starts_with("->") => {
                chars.next();
                chars.next();
                out.push(Lexeme::Arrow);
            }
            '\'' | '"' => {
                chars.next();
                let body_start = i + 1;
                let end = line[body_start..].find(c).ok_or_else(|| GrammarError::syntax(lineno, "unterminated quote"))?;
                let word = &line[body_start..body_start + end];
                if word.is_empty() || word.contains(char::is_whitespace) {
                    return Err(GrammarError::syntax(lineno, "terminal must be a single non-empty word"));
                }
                out.push(Lexeme::Sym(Symbol::Terminal(word.to_owned())));
                while chars.peek().is_some_and(|&(j, _)| j <= body_start + end) {
                    chars.next();
                }
            }
            '[' => {
                let end = line[i..].find(']').ok_or_else(|| GrammarError::syntax(lineno, "unterminated '['"))?;
                out.push(Lexeme::Prob(line[i + 1..i + end].trim().to_owned()));
                while chars.peek().is_some_and(|&(j, _)| j <= i + end) {
                    chars.next();
                }
            }
            _ => {
                let mut end = line.len();
                for (j, d) in line[i..].char_indices() {
                    if d.is_whitespace() || matches!(d, '|' | '[' | '\'' | '"' | '#') || line[i + j..].starts_with("->") {
                        end = i + j;
                        break;
                    }
                }
                out.push(Lexeme::Sym(Symbol::Nonterminal(line[i..end].to_owned())));
                while chars.peek().is_some_and(|&(j, _)| j < end) {
                    chars.next();
                }
            }
        }
    }
    Ok(out)
}

struct RawRule {
    line: usize,
    production: Production,
    prob: Option<f64>,
}

fn parse_rules(text: &str, probabilistic: bool) -> Result<Vec<RawRule>, GrammarError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let lexemes = lex_line(line, lineno)?;
        if lexemes.is_empty() {
            continue;
        }
        let lhs = match lexemes.first() {
            Some(Lexeme::Sym(Symbol::Nonterminal(nt))) => nt.clone(),
            Some(Lexeme::Sym(Symbol::Terminal(_))) => return Err(GrammarError::InvalidProduction { line: lineno }),
            _ => return Err(GrammarError::syntax(lineno, "expected a left-hand side symbol")),
        };
        if lexemes.get(1) != Some(&Lexeme::Arrow) {
            return Err(GrammarError::syntax(lineno, "expected '->'"));
        }
        for alt in lexemes[2..].split(|l| *l == Lexeme::Bar) {
            let mut rhs = Vec::new();
            let mut prob = None;
            for (k, lexeme) in alt.iter().enumerate() {
                match lexeme {
                    Lexeme::Sym(s) if prob.is_none() => rhs.push(s.clone()),
                    Lexeme::Prob(p) if probabilistic && k + 1 == alt.len() => {
                        let value: f64 = p.parse().map_err(|_| GrammarError::syntax(lineno, format!("bad probability '{p}'")))?;
                        if !(value > 0.0 && value <= 1.0) {
                            return Err(GrammarError::InvalidProbability { line: lineno });
                        }
                        prob = Some(value);
                    }
                    Lexeme::Prob(_) if !probabilistic => return Err(GrammarError::syntax(lineno, "probability in a non-probabilistic grammar")),
                    _ => return Err(GrammarError::syntax(lineno, "unexpected token")),
                }
            }
            if rhs.is_empty() {
                return Err(GrammarError::syntax(lineno, "empty right-hand side"));
            }
            if probabilistic && prob.is_none() {
                return Err(GrammarError::syntax(lineno, "missing [p] probability"));
            }
            rules.push(RawRule { line: lineno, production: Production::new(lhs.clone(), rhs), prob });
        }
    }
    Ok(rules)
}

pub fn parse_cfg(text: &str) -> Result<Grammar, GrammarError> {
    let rules = parse_rules(text, false)?;
    let start = rules.first().ok_or(GrammarError::EmptyGrammar)?.production.lhs.clone();
    Grammar::new(start, rules.into_iter().map(|r| r.production).collect())
}

pub fn parse_pcfg(text: &str) -> Result<PcfgGrammar, GrammarError> {
    let rules = parse_rules(text, true)?;
    let start = rules.first().ok_or(GrammarError::EmptyGrammar)?.production.lhs.clone();
    let mut probs = Vec::with_capacity(rules.len());
    let mut productions = Vec::with_capacity(rules.len());
    for r in rules {
        debug_assert!(r.line > 0);
        probs.push(r.prob.expect("probabilistic rules always carry a probability"));
        productions.push(r.production);
    }
    PcfgGrammar::new(Grammar::new(start, productions)?, probs)
}
