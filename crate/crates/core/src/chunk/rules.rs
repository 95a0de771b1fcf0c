//! Chunk rules and cascades.
//!
//! Every rule makes a single left-to-right pass and never re-applies to its
//! own output. Matches are leftmost-longest and non-overlapping, and a match
//! must consume at least one tag.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::pattern::{EncodedTags, TagPattern};
use super::{ChunkError, ChunkStructure, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChunkRuleKind {
    /// Matches in unchunked material become chunks.
    Chunk,
    /// Matches inside a chunk are cut out of it.
    Chink,
    /// Chunks whose whole content matches are dissolved.
    UnChunk,
    /// Adjacent chunks join when the left one ends with the first pattern
    /// and the right one starts with the second.
    Merge,
    /// A chunk splits where the first pattern ends and the second begins.
    Split,
}

impl ChunkRuleKind {
    pub fn arity(self) -> usize {
        match self {
            ChunkRuleKind::Merge | ChunkRuleKind::Split => 2,
            _ => 1,
        }
    }
}

/// A rule as written in cascade files: `{"kind": "Chunk", "patterns": ["<NN.*>"], "note": ""}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRuleSpec {
    pub kind: ChunkRuleKind,
    pub patterns: Vec<String>,
    #[serde(default)]
    pub note: String,
}

impl ChunkRuleSpec {
    fn one(kind: ChunkRuleKind, p: &str) -> Self {
        ChunkRuleSpec { kind, patterns: vec![p.to_owned()], note: String::new() }
    }

    fn two(kind: ChunkRuleKind, left: &str, right: &str) -> Self {
        ChunkRuleSpec { kind, patterns: vec![left.to_owned(), right.to_owned()], note: String::new() }
    }

    pub fn chunk(p: &str) -> Self {
        Self::one(ChunkRuleKind::Chunk, p)
    }

    pub fn chink(p: &str) -> Self {
        Self::one(ChunkRuleKind::Chink, p)
    }

    pub fn unchunk(p: &str) -> Self {
        Self::one(ChunkRuleKind::UnChunk, p)
    }

    pub fn merge(left: &str, right: &str) -> Self {
        Self::two(ChunkRuleKind::Merge, left, right)
    }

    pub fn split(left: &str, right: &str) -> Self {
        Self::two(ChunkRuleKind::Split, left, right)
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = note.to_owned();
        self
    }

    pub fn compile(&self) -> Result<ChunkRule, ChunkError> {
        ChunkRule::compile(self)
    }
}

impl fmt::Display for ChunkRuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.patterns.iter().map(|p| format!("'{p}'")).collect();
        write!(f, "{:?}Rule({})", self.kind, args.join(", "))
    }
}

/// A rule with its patterns compiled.
#[derive(Debug, Clone)]
pub struct ChunkRule {
    spec: ChunkRuleSpec,
    patterns: Vec<TagPattern>,
}

impl ChunkRule {
    pub fn compile(spec: &ChunkRuleSpec) -> Result<Self, ChunkError> {
        let expected = spec.kind.arity();
        if spec.patterns.len() != expected {
            return Err(ChunkError::RuleArity { kind: spec.kind, expected, got: spec.patterns.len() });
        }
        let patterns = spec.patterns.iter().map(|p| TagPattern::compile(p)).collect::<Result<_, _>>()?;
        Ok(ChunkRule { spec: spec.clone(), patterns })
    }

    pub fn spec(&self) -> &ChunkRuleSpec {
        &self.spec
    }

    pub fn apply(&self, cs: &ChunkStructure) -> ChunkStructure {
        let enc = EncodedTags::new(&cs.tags());
        let chunks = match self.spec.kind {
            ChunkRuleKind::Chunk => chunk(cs, &enc, &self.patterns[0]),
            ChunkRuleKind::Chink => chink(cs, &enc, &self.patterns[0]),
            ChunkRuleKind::UnChunk => cs.chunks().iter().copied().filter(|&(i, j)| !enc.matches(&self.patterns[0], i, j)).collect(),
            ChunkRuleKind::Merge => merge(cs, &enc, &self.patterns[0], &self.patterns[1]),
            ChunkRuleKind::Split => split(cs, &enc, &self.patterns[0], &self.patterns[1]),
        };
        cs.with_chunks(chunks)
    }
}

fn chunk(cs: &ChunkStructure, enc: &EncodedTags, p: &TagPattern) -> Vec<Span> {
    let mut chunks: Vec<Span> = cs.chunks().to_vec();
    for (a, b) in cs.gaps() {
        chunks.extend(enc.find_all(p, a, b));
    }
    chunks.sort_unstable();
    chunks
}

fn chink(cs: &ChunkStructure, enc: &EncodedTags, p: &TagPattern) -> Vec<Span> {
    let mut out = Vec::new();
    for &(a, b) in cs.chunks() {
        let mut pos = a;
        for (i, j) in enc.find_all(p, a, b) {
            if pos < i {
                out.push((pos, i));
            }
            pos = j;
        }
        if pos < b {
            out.push((pos, b));
        }
    }
    out
}

fn ends_with(enc: &EncodedTags, p: &TagPattern, (a, b): Span) -> bool {
    (a..b).any(|k| enc.matches(p, k, b))
}

fn starts_with(enc: &EncodedTags, p: &TagPattern, (a, b): Span) -> bool {
    (a + 1..=b).any(|k| enc.matches(p, a, k))
}

fn merge(cs: &ChunkStructure, enc: &EncodedTags, left: &TagPattern, right: &TagPattern) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    for &next in cs.chunks() {
        match out.last_mut() {
            Some(cur) if cur.1 == next.0 && ends_with(enc, left, *cur) && starts_with(enc, right, next) => cur.1 = next.1,
            _ => out.push(next),
        }
    }
    out
}

/// The leftmost split site at or after `pos` inside `a..b`: returns the
/// boundary and where the right-hand match ends.
fn next_split_site(enc: &EncodedTags, left: &TagPattern, right: &TagPattern, pos: usize, b: usize) -> Option<(usize, usize)> {
    for i in pos..b {
        for k in (i + 1..b).rev() {
            if enc.matches(left, i, k) {
                if let Some(j) = enc.longest_from(right, k, b) {
                    return Some((k, j));
                }
            }
        }
    }
    None
}

fn split(cs: &ChunkStructure, enc: &EncodedTags, left: &TagPattern, right: &TagPattern) -> Vec<Span> {
    let mut out = Vec::new();
    for &(a, b) in cs.chunks() {
        let mut piece_start = a;
        let mut pos = a;
        while let Some((k, j)) = next_split_site(enc, left, right, pos, b) {
            out.push((piece_start, k));
            piece_start = k;
            pos = j;
        }
        out.push((piece_start, b));
    }
    out
}

pub fn apply_chunk_rule(cs: &ChunkStructure, rule: &ChunkRule) -> ChunkStructure {
    rule.apply(cs)
}

/// Applies the rules in order, each to the previous rule's output.
pub fn apply_cascade(cs: &ChunkStructure, rules: &[ChunkRule]) -> ChunkStructure {
    rules.iter().fold(cs.clone(), |acc, rule| rule.apply(&acc))
}
