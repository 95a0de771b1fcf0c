//! Independent oracles shared by integration and acceptance tests.
//!
//! Nothing here calls into the library: grammars are produced as text, parses are
//! enumerated by brute force and regexes are matched by a small recursive matcher.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::rngs::StdRng;
use rand::Rng;

pub const NONTERMINALS: [&str; 4] = ["S", "A", "B", "C"];
pub const TERMINALS: [char; 2] = ['a', 'b'];

/// Parses of one nonterminal over one span, keyed by (nonterminal, start, end).
type Memo = HashMap<(usize, usize, usize), Vec<(String, f64)>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    T(char),
    N(usize),
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub lhs: usize,
    pub rhs: Vec<Sym>,
    pub prob: f64,
}

/// A random epsilon-free grammar over S, A, B, C with terminals a and b.
///
/// Unary rules only point to a later nonterminal, so there are no unary cycles
/// and every sentence has finitely many parses.
#[derive(Debug, Clone)]
pub struct RandomGrammar {
    pub rules: Vec<Rule>,
}

impl RandomGrammar {
    pub fn generate(rng: &mut StdRng, max_rules: usize) -> Self {
        let total = rng.gen_range(NONTERMINALS.len()..=max_rules);
        let mut rules: Vec<Rule> = Vec::new();
        let mut attempts = 0;
        while rules.len() < total && attempts < 1000 {
            attempts += 1;
            // The first pass guarantees each nonterminal has an expansion.
            let lhs = if rules.len() < NONTERMINALS.len() { rules.len() } else { rng.gen_range(0..NONTERMINALS.len()) };
            let len = match rng.gen_range(0..20) {
                0..=7 => 1,
                8..=16 => 2,
                _ => 3,
            };
            let mut rhs: Vec<Sym> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.35) {
                        Sym::T(TERMINALS[rng.gen_range(0..TERMINALS.len())])
                    } else {
                        Sym::N(rng.gen_range(0..NONTERMINALS.len()))
                    }
                })
                .collect();
            if let [Sym::N(n)] = rhs[..] {
                if n <= lhs {
                    rhs = vec![Sym::T(TERMINALS[rng.gen_range(0..TERMINALS.len())])];
                }
            }
            if rules.iter().any(|r| r.lhs == lhs && r.rhs == rhs) {
                continue;
            }
            rules.push(Rule { lhs, rhs, prob: 1.0 });
        }
        let mut g = RandomGrammar { rules };
        g.assign_probabilities(rng);
        g
    }

    fn assign_probabilities(&mut self, rng: &mut StdRng) {
        let weights: Vec<f64> = self.rules.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        for lhs in 0..NONTERMINALS.len() {
            let total: f64 = self.rules.iter().zip(&weights).filter(|(r, _)| r.lhs == lhs).map(|(_, w)| w).sum();
            for (r, w) in self.rules.iter_mut().zip(&weights) {
                if r.lhs == lhs {
                    r.prob = w / total;
                }
            }
        }
    }

    fn rhs_text(rhs: &[Sym]) -> String {
        rhs.iter()
            .map(|s| match s {
                Sym::T(c) => format!("'{c}'"),
                Sym::N(n) => NONTERMINALS[*n].to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn cfg_text(&self) -> String {
        self.rules.iter().map(|r| format!("{} -> {}\n", NONTERMINALS[r.lhs], Self::rhs_text(&r.rhs))).collect()
    }

    /// Probabilities are printed in full so the parsed values are bit-identical.
    pub fn pcfg_text(&self) -> String {
        self.rules.iter().map(|r| format!("{} -> {} [{:?}]\n", NONTERMINALS[r.lhs], Self::rhs_text(&r.rhs), r.prob)).collect()
    }

    /// Samples a sentence of at most `max_len` tokens derivable from S.
    pub fn sample_sentence(&self, rng: &mut StdRng, max_len: usize) -> Option<Vec<char>> {
        for _ in 0..30 {
            let mut out = Vec::new();
            if self.sample_into(0, rng, 0, max_len, &mut out) && !out.is_empty() {
                return Some(out);
            }
        }
        None
    }

    fn sample_into(&self, nt: usize, rng: &mut StdRng, depth: usize, max_len: usize, out: &mut Vec<char>) -> bool {
        if depth > 12 || out.len() > max_len {
            return false;
        }
        let choices: Vec<&Rule> = self.rules.iter().filter(|r| r.lhs == nt).collect();
        let rule = choices[rng.gen_range(0..choices.len())];
        for s in &rule.rhs {
            let ok = match s {
                Sym::T(c) => {
                    out.push(*c);
                    out.len() <= max_len
                }
                Sym::N(n) => self.sample_into(*n, rng, depth + 1, max_len, out),
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Every parse of `tokens` rooted in S, as a bracketed string with its probability.
    pub fn enumerate_parses(&self, tokens: &[char]) -> Vec<(String, f64)> {
        let mut memo = HashMap::new();
        self.derive(0, 0, tokens.len(), tokens, &mut memo)
    }

    fn derive(&self, nt: usize, i: usize, j: usize, tokens: &[char], memo: &mut Memo) -> Vec<(String, f64)> {
        if let Some(hit) = memo.get(&(nt, i, j)) {
            return hit.clone();
        }
        let mut out = Vec::new();
        for rule in self.rules.iter().filter(|r| r.lhs == nt) {
            for (parts, p) in self.expand(&rule.rhs, i, j, tokens, memo) {
                out.push((format!("({} {})", NONTERMINALS[nt], parts.join(" ")), rule.prob * p));
            }
        }
        memo.insert((nt, i, j), out.clone());
        out
    }

    /// All ways for `rhs` to cover exactly `tokens[i..j]`, each symbol taking at least one token.
    fn expand(&self, rhs: &[Sym], i: usize, j: usize, tokens: &[char], memo: &mut Memo) -> Vec<(Vec<String>, f64)> {
        let Some((first, rest)) = rhs.split_first() else {
            return if i == j { vec![(Vec::new(), 1.0)] } else { Vec::new() };
        };
        if j < i + rhs.len() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let last_mid = if rest.is_empty() { j } else { j - rest.len() };
        for mid in i + 1..=last_mid {
            let heads: Vec<(String, f64)> = match first {
                Sym::T(c) if mid == i + 1 && tokens[i] == *c => vec![(c.to_string(), 1.0)],
                Sym::T(_) => Vec::new(),
                Sym::N(n) => self.derive(*n, i, mid, tokens, memo),
            };
            if heads.is_empty() {
                continue;
            }
            let tails = self.expand(rest, mid, j, tokens, memo);
            for (h, hp) in &heads {
                for (t, tp) in &tails {
                    let mut parts = vec![h.clone()];
                    parts.extend(t.iter().cloned());
                    out.push((parts, hp * tp));
                }
            }
        }
        out
    }
}

pub fn sentence_text(tokens: &[char]) -> String {
    tokens.iter().map(char::to_string).collect::<Vec<_>>().join(" ")
}

pub fn bracketed_set(parses: &[(String, f64)]) -> BTreeSet<String> {
    parses.iter().map(|(s, _)| s.clone()).collect()
}

/// Regular expressions with `|`, `*`, `+`, `?`, grouping and backslash escapes.
#[derive(Debug, Clone)]
pub enum Re {
    Char(char),
    Seq(Vec<Re>),
    Or(Vec<Re>),
    Star(Box<Re>),
    Plus(Box<Re>),
    Opt(Box<Re>),
}

impl Re {
    pub fn parse(src: &str) -> Option<Re> {
        let chars: Vec<char> = src.chars().collect();
        let (re, rest) = parse_or(&chars)?;
        rest.is_empty().then_some(re)
    }

    /// The set of positions at which a match starting at `at` can end.
    pub fn ends(&self, s: &[char], at: usize) -> BTreeSet<usize> {
        match self {
            Re::Char(c) => (s.get(at) == Some(c)).then_some(at + 1).into_iter().collect(),
            Re::Seq(parts) => parts.iter().fold(BTreeSet::from([at]), |starts, p| starts.iter().flat_map(|&k| p.ends(s, k)).collect()),
            Re::Or(alts) => alts.iter().flat_map(|a| a.ends(s, at)).collect(),
            Re::Opt(inner) => {
                let mut out = inner.ends(s, at);
                out.insert(at);
                out
            }
            Re::Star(inner) => Self::closure(inner, s, BTreeSet::from([at])),
            Re::Plus(inner) => Self::closure(inner, s, inner.ends(s, at)),
        }
    }

    fn closure(inner: &Re, s: &[char], seed: BTreeSet<usize>) -> BTreeSet<usize> {
        let mut reached = seed.clone();
        let mut frontier: Vec<usize> = seed.into_iter().collect();
        while let Some(k) = frontier.pop() {
            for e in inner.ends(s, k) {
                if reached.insert(e) {
                    frontier.push(e);
                }
            }
        }
        reached
    }

    pub fn full_match(&self, s: &[char]) -> bool {
        self.ends(s, 0).contains(&s.len())
    }

    pub fn alphabet(&self, out: &mut BTreeSet<char>) {
        match self {
            Re::Char(c) => {
                out.insert(*c);
            }
            Re::Seq(v) | Re::Or(v) => v.iter().for_each(|r| r.alphabet(out)),
            Re::Star(r) | Re::Plus(r) | Re::Opt(r) => r.alphabet(out),
        }
    }
}

fn parse_or(s: &[char]) -> Option<(Re, &[char])> {
    let (first, mut rest) = parse_seq(s)?;
    let mut alts = vec![first];
    while let Some(('|', tail)) = rest.split_first().map(|(c, t)| (*c, t)) {
        let (next, r) = parse_seq(tail)?;
        alts.push(next);
        rest = r;
    }
    Some((if alts.len() == 1 { alts.remove(0) } else { Re::Or(alts) }, rest))
}

fn parse_seq(mut s: &[char]) -> Option<(Re, &[char])> {
    let mut items = Vec::new();
    while let Some(&c) = s.first() {
        if c == '|' || c == ')' {
            break;
        }
        let (mut atom, mut rest) = match c {
            '(' => {
                let (inner, r) = parse_or(&s[1..])?;
                (inner, r.strip_prefix(&[')'])?)
            }
            '\\' => (Re::Char(*s.get(1)?), &s[2..]),
            '*' | '+' | '?' => return None,
            _ => (Re::Char(c), &s[1..]),
        };
        while let Some(&op) = rest.first() {
            atom = match op {
                '*' => Re::Star(Box::new(atom)),
                '+' => Re::Plus(Box::new(atom)),
                '?' => Re::Opt(Box::new(atom)),
                _ => break,
            };
            rest = &rest[1..];
        }
        items.push(atom);
        s = rest;
    }
    if items.is_empty() {
        return None;
    }
    Some((if items.len() == 1 { items.remove(0) } else { Re::Seq(items) }, s))
}

/// Every string over `alphabet` of length at most `max_len`, shortest first.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<char>| {
                alphabet.iter().map(move |&c| {
                    let mut next = w.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
