//! Finite-state automata built from regular expressions.
//!
//! The regex dialect is deliberately small: single-character symbols,
//! concatenation, `|`, `*`, `+`, `?` and parentheses. A backslash makes the
//! next character literal. [`regex_to_nfa`] uses Thompson's construction and
//! [`nfa_to_dfa`] the subset construction; the resulting DFA is not
//! minimized and has no dead state, so a missing transition rejects.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type State = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsaError {
    /// Character offset of the first symbol that cannot be parsed.
    #[error("regex syntax error at position {0}")]
    RegexSyntax(usize),
    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ast {
    Symbol(char),
    Concat(Vec<Ast>),
    Alt(Vec<Ast>),
    Star(Box<Ast>),
    Plus(Box<Ast>),
    Optional(Box<Ast>),
}

struct RegexParser {
    chars: Vec<char>,
    pos: usize,
}

const OPERATORS: &[char] = &['|', '*', '+', '?', '(', ')'];

impl RegexParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn alternation(&mut self) -> Result<Ast, FsaError> {
        let mut alts = vec![self.concatenation()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            alts.push(self.concatenation()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Ast::Alt(alts) })
    }

    fn concatenation(&mut self) -> Result<Ast, FsaError> {
        let mut parts = vec![self.repetition()?];
        while self.peek().is_some_and(|c| c != '|' && c != ')') {
            parts.push(self.repetition()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Ast::Concat(parts) })
    }

    fn repetition(&mut self) -> Result<Ast, FsaError> {
        let mut ast = self.atom()?;
        while let Some(op @ ('*' | '+' | '?')) = self.peek() {
            self.pos += 1;
            ast = match op {
                '*' => Ast::Star(Box::new(ast)),
                '+' => Ast::Plus(Box::new(ast)),
                _ => Ast::Optional(Box::new(ast)),
            };
        }
        Ok(ast)
    }

    fn atom(&mut self) -> Result<Ast, FsaError> {
        let at = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.alternation()?;
                if self.peek() != Some(')') {
                    return Err(FsaError::RegexSyntax(self.pos));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('\\') => {
                let c = self.chars.get(at + 1).copied().ok_or(FsaError::RegexSyntax(at + 1))?;
                self.pos += 2;
                Ok(Ast::Symbol(c))
            }
            Some(c) if !OPERATORS.contains(&c) => {
                self.pos += 1;
                Ok(Ast::Symbol(c))
            }
            _ => Err(FsaError::RegexSyntax(at)),
        }
    }
}

fn parse_regex(regex: &str) -> Result<Ast, FsaError> {
    let mut p = RegexParser { chars: regex.chars().collect(), pos: 0 };
    let ast = p.alternation()?;
    if p.pos != p.chars.len() {
        return Err(FsaError::RegexSyntax(p.pos));
    }
    Ok(ast)
}

/// A nondeterministic automaton; `None` labels an epsilon transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    num_states: usize,
    alphabet: BTreeSet<char>,
    transitions: Vec<(State, Option<char>, State)>,
    start: State,
    finals: BTreeSet<State>,
}

/// A deterministic automaton with a partial transition function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    num_states: usize,
    alphabet: BTreeSet<char>,
    transitions: BTreeMap<(State, char), State>,
    start: State,
    finals: BTreeSet<State>,
}

struct Thompson {
    num_states: usize,
    transitions: Vec<(State, Option<char>, State)>,
}

impl Thompson {
    fn fresh(&mut self) -> State {
        self.num_states += 1;
        self.num_states - 1
    }

    /// Returns the (entry, exit) states of a fragment for `ast`.
    fn build(&mut self, ast: &Ast) -> (State, State) {
        match ast {
            Ast::Symbol(c) => {
                let (s, e) = (self.fresh(), self.fresh());
                self.transitions.push((s, Some(*c), e));
                (s, e)
            }
            Ast::Concat(parts) => {
                let (s, mut e) = self.build(&parts[0]);
                for part in &parts[1..] {
                    let (ps, pe) = self.build(part);
                    self.transitions.push((e, None, ps));
                    e = pe;
                }
                (s, e)
            }
            Ast::Alt(alts) => {
                let (s, e) = (self.fresh(), self.fresh());
                for alt in alts {
                    let (as_, ae) = self.build(alt);
                    self.transitions.push((s, None, as_));
                    self.transitions.push((ae, None, e));
                }
                (s, e)
            }
            Ast::Star(inner) | Ast::Plus(inner) | Ast::Optional(inner) => {
                let (s, e) = (self.fresh(), self.fresh());
                let (is, ie) = self.build(inner);
                self.transitions.push((s, None, is));
                self.transitions.push((ie, None, e));
                if !matches!(ast, Ast::Plus(_)) {
                    self.transitions.push((s, None, e));
                }
                if !matches!(ast, Ast::Optional(_)) {
                    self.transitions.push((ie, None, is));
                }
                (s, e)
            }
        }
    }
}

pub fn regex_to_nfa(regex: &str) -> Result<Nfa, FsaError> {
    let ast = parse_regex(regex)?;
    let mut t = Thompson { num_states: 0, transitions: Vec::new() };
    let (start, end) = t.build(&ast);
    let alphabet = t.transitions.iter().filter_map(|&(_, c, _)| c).collect();
    Ok(Nfa { num_states: t.num_states, alphabet, transitions: t.transitions, start, finals: BTreeSet::from([end]) })
}

impl Nfa {
    pub fn new(
        num_states: usize,
        alphabet: BTreeSet<char>,
        transitions: Vec<(State, Option<char>, State)>,
        start: State,
        finals: BTreeSet<State>,
    ) -> Result<Self, FsaError> {
        let nfa = Nfa { num_states, alphabet, transitions, start, finals };
        nfa.validate()?;
        Ok(nfa)
    }

    fn validate(&self) -> Result<(), FsaError> {
        let bad = |m: String| Err(FsaError::InvalidAutomaton(m));
        if self.start >= self.num_states {
            return bad(format!("start state {} out of range", self.start));
        }
        if let Some(f) = self.finals.iter().find(|&&f| f >= self.num_states) {
            return bad(format!("final state {f} out of range"));
        }
        for &(from, sym, to) in &self.transitions {
            if from >= self.num_states || to >= self.num_states {
                return bad(format!("transition {from} -> {to} out of range"));
            }
            if sym.is_some_and(|c| !self.alphabet.contains(&c)) {
                return bad(format!("symbol {:?} not in alphabet", sym.unwrap()));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn transitions(&self) -> &[(State, Option<char>, State)] {
        &self.transitions
    }

    pub fn start(&self) -> State {
        self.start
    }

    pub fn finals(&self) -> &BTreeSet<State> {
        &self.finals
    }

    pub fn epsilon_closure(&self, states: &BTreeSet<State>) -> BTreeSet<State> {
        let mut closure = states.clone();
        let mut stack: Vec<State> = states.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &(from, sym, to) in &self.transitions {
                if from == s && sym.is_none() && closure.insert(to) {
                    stack.push(to);
                }
            }
        }
        closure
    }

    fn step(&self, states: &BTreeSet<State>, c: char) -> BTreeSet<State> {
        let moved = self.transitions.iter().filter(|&&(from, sym, _)| sym == Some(c) && states.contains(&from)).map(|&(_, _, to)| to).collect();
        self.epsilon_closure(&moved)
    }

    pub fn simulate(&self, input: &str) -> (bool, SimTrace) {
        run(input, self.epsilon_closure(&BTreeSet::from([self.start])), |set, c| self.step(set, c), |set| set.iter().any(|s| self.finals.contains(s)))
    }

    pub fn accepts(&self, input: &str) -> bool {
        self.simulate(input).0
    }

    pub fn to_json(&self) -> AutomatonJson {
        AutomatonJson {
            states: (0..self.num_states).collect(),
            alphabet: self.alphabet.iter().copied().collect(),
            transitions: self.transitions.iter().map(|&(from, symbol, to)| JsonTransition { from, symbol, to }).collect(),
            start: self.start,
            finals: self.finals.iter().copied().collect(),
        }
    }
}

impl From<&Dfa> for Nfa {
    fn from(d: &Dfa) -> Self {
        Nfa {
            num_states: d.num_states,
            alphabet: d.alphabet.clone(),
            transitions: d.transitions.iter().map(|(&(from, c), &to)| (from, Some(c), to)).collect(),
            start: d.start,
            finals: d.finals.clone(),
        }
    }
}

/// Subset construction over epsilon-closures, emitting reachable states only.
///
/// Two closures are the same DFA state when they agree on acceptance and on
/// the NFA states that have symbol transitions. Those are the only states
/// that influence future behaviour, so Thompson's epsilon-only glue states do
/// not split otherwise equivalent subsets.
pub fn nfa_to_dfa(nfa: &Nfa) -> Dfa {
    let important: BTreeSet<State> = nfa.transitions.iter().filter(|t| t.1.is_some()).map(|t| t.0).collect();
    let key = |set: &BTreeSet<State>| -> (BTreeSet<State>, bool) {
        (set.intersection(&important).copied().collect(), set.iter().any(|s| nfa.finals.contains(s)))
    };
    let start_set = nfa.epsilon_closure(&BTreeSet::from([nfa.start]));
    let mut ids = BTreeMap::from([(key(&start_set), 0)]);
    let mut finals = BTreeSet::new();
    let mut transitions = BTreeMap::new();
    let mut queue = VecDeque::from([(start_set, 0)]);
    while let Some((set, id)) = queue.pop_front() {
        if set.iter().any(|s| nfa.finals.contains(s)) {
            finals.insert(id);
        }
        for &c in &nfa.alphabet {
            let next = nfa.step(&set, c);
            if next.is_empty() {
                continue;
            }
            let k = key(&next);
            let next_id = match ids.get(&k) {
                Some(&n) => n,
                None => {
                    let n = ids.len();
                    ids.insert(k, n);
                    queue.push_back((next, n));
                    n
                }
            };
            transitions.insert((id, c), next_id);
        }
    }
    let dfa = Dfa { num_states: ids.len(), alphabet: nfa.alphabet.clone(), transitions, start: 0, finals };
    debug_assert!(dfa.validate().is_ok());
    dfa
}

impl Dfa {
    fn validate(&self) -> Result<(), FsaError> {
        Nfa::from(self).validate()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn transitions(&self) -> &BTreeMap<(State, char), State> {
        &self.transitions
    }

    pub fn start(&self) -> State {
        self.start
    }

    pub fn finals(&self) -> &BTreeSet<State> {
        &self.finals
    }

    pub fn next(&self, state: State, c: char) -> Option<State> {
        self.transitions.get(&(state, c)).copied()
    }

    pub fn simulate(&self, input: &str) -> (bool, SimTrace) {
        run(
            input,
            BTreeSet::from([self.start]),
            |set, c| set.iter().filter_map(|&s| self.next(s, c)).collect(),
            |set| set.iter().any(|s| self.finals.contains(s)),
        )
    }

    pub fn accepts(&self, input: &str) -> bool {
        self.simulate(input).0
    }

    pub fn to_json(&self) -> AutomatonJson {
        Nfa::from(self).to_json()
    }

    /// Rebuilds a DFA from its JSON form, rejecting epsilon moves and
    /// duplicate (state, symbol) pairs.
    pub fn from_json(json: &AutomatonJson) -> Result<Self, FsaError> {
        let nfa = Nfa::from_json(json)?;
        let mut transitions = BTreeMap::new();
        for &(from, sym, to) in &nfa.transitions {
            let c = sym.ok_or_else(|| FsaError::InvalidAutomaton("epsilon transition in a DFA".into()))?;
            if transitions.insert((from, c), to).is_some() {
                return Err(FsaError::InvalidAutomaton(format!("two transitions from {from} on {c:?}")));
            }
        }
        Ok(Dfa { num_states: nfa.num_states, alphabet: nfa.alphabet, transitions, start: nfa.start, finals: nfa.finals })
    }
}

/// `(input position, active states)` after each consumed symbol, starting
/// with position 0. A trace that ends early means every run died.
pub type SimTrace = Vec<(usize, BTreeSet<State>)>;

fn run(
    input: &str,
    initial: BTreeSet<State>,
    step: impl Fn(&BTreeSet<State>, char) -> BTreeSet<State>,
    accepting: impl Fn(&BTreeSet<State>) -> bool,
) -> (bool, SimTrace) {
    let mut trace = vec![(0, initial)];
    for (pos, c) in input.chars().enumerate() {
        let next = step(&trace.last().unwrap().1, c);
        let dead = next.is_empty();
        trace.push((pos + 1, next));
        if dead {
            return (false, trace);
        }
    }
    let accepted = accepting(&trace.last().unwrap().1);
    (accepted, trace)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonTransition {
    pub from: State,
    /// `null` for an epsilon transition.
    pub symbol: Option<char>,
    pub to: State,
}

/// The exchange format shared by NFAs and DFAs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonJson {
    pub states: Vec<State>,
    pub alphabet: Vec<char>,
    pub transitions: Vec<JsonTransition>,
    pub start: State,
    pub finals: Vec<State>,
}

impl Nfa {
    /// States must be numbered `0..n`.
    pub fn from_json(json: &AutomatonJson) -> Result<Self, FsaError> {
        if json.states.iter().copied().ne(0..json.states.len()) {
            return Err(FsaError::InvalidAutomaton("states must be 0..n in order".into()));
        }
        Nfa::new(
            json.states.len(),
            json.alphabet.iter().copied().collect(),
            json.transitions.iter().map(|t| (t.from, t.symbol, t.to)).collect(),
            json.start,
            json.finals.iter().copied().collect(),
        )
    }
}
