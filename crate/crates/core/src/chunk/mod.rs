//! Transformational regular-expression chunking.
//!
//! A [`ChunkStructure`] partitions a tagged sentence into non-overlapping
//! chunks and unchunked material. Chunk rules rewrite that partition, and a
//! cascade applies several rules in order. Rules match [tag patterns](TagPattern)
//! against the tags of the tokens, never against the words themselves.

mod pattern;
mod rules;
mod score;

pub use pattern::{encode_tags, tag_pattern_to_regex, TagPattern};
pub use rules::{apply_cascade, apply_chunk_rule, ChunkRule, ChunkRuleKind, ChunkRuleSpec};
pub use score::{np_tag_rates, rule_from_tag_rates, score_chunks, score_corpus, unchunk, ChunkScore};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{read_tagged, TaggedToken, TextError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChunkError {
    #[error("bad tag pattern {pattern:?}: {message}")]
    PatternSyntax { pattern: String, message: String },
    #[error("{kind:?} rule needs {expected} pattern(s), got {got}")]
    RuleArity { kind: ChunkRuleKind, expected: usize, got: usize },
    #[error("gold and test structures cover different tokens")]
    TokenMismatch,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("malformed chunked text: {0}")]
    MalformedChunkedText(String),
    #[error(transparent)]
    Text(#[from] TextError),
}

/// A half-open token span `(start, end)`.
pub type Span = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkStructure {
    tokens: Vec<TaggedToken>,
    chunks: Vec<Span>,
}

impl ChunkStructure {
    pub fn unchunked(tokens: Vec<TaggedToken>) -> Self {
        ChunkStructure { tokens, chunks: Vec::new() }
    }

    /// Panics if the spans are empty, out of bounds, unsorted or overlapping.
    pub fn new(tokens: Vec<TaggedToken>, chunks: Vec<Span>) -> Self {
        let cs = ChunkStructure { tokens, chunks };
        assert!(cs.is_well_formed(), "invalid chunk spans {:?}", cs.chunks);
        cs
    }

    pub fn tokens(&self) -> &[TaggedToken] {
        &self.tokens
    }

    pub fn chunks(&self) -> &[Span] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tags(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.tag().unwrap_or("")).collect()
    }

    pub(crate) fn with_chunks(&self, chunks: Vec<Span>) -> Self {
        let cs = ChunkStructure { tokens: self.tokens.clone(), chunks };
        debug_assert!(cs.is_well_formed(), "{:?}", cs.chunks);
        cs
    }

    /// Spans are non-empty, sorted, disjoint and inside the sentence.
    pub fn is_well_formed(&self) -> bool {
        let n = self.tokens.len();
        self.chunks.iter().all(|&(i, j)| i < j && j <= n) && self.chunks.windows(2).all(|w| w[0].1 <= w[1].0)
    }

    /// Unchunked stretches between chunks.
    pub(crate) fn gaps(&self) -> Vec<Span> {
        let mut out = Vec::new();
        let mut pos = 0;
        for &(i, j) in &self.chunks {
            if pos < i {
                out.push((pos, i));
            }
            pos = j;
        }
        if pos < self.tokens.len() {
            out.push((pos, self.tokens.len()));
        }
        out
    }

    /// The tag-string encoding, e.g. `{<DT><NN>}<VBD>`.
    pub fn encode(&self) -> String {
        let tags = self.tags();
        let mut out = String::new();
        let mut chunks = self.chunks.iter().peekable();
        for (k, tag) in tags.iter().enumerate() {
            if chunks.peek().is_some_and(|c| c.0 == k) {
                out.push('{');
            }
            out.push('<');
            out.push_str(tag);
            out.push('>');
            if chunks.peek().is_some_and(|c| c.1 == k + 1) {
                out.push('}');
                chunks.next();
            }
        }
        out
    }

    /// Reads chunk boundaries back from an encoding of these tokens' tags.
    pub fn decode(tokens: Vec<TaggedToken>, encoded: &str) -> Result<Self, ChunkError> {
        let bad = |m: &str| ChunkError::MalformedChunkedText(format!("{m} in {encoded:?}"));
        let mut chunks = Vec::new();
        let mut open: Option<usize> = None;
        let mut k = 0;
        let mut rest = encoded;
        while let Some(c) = rest.chars().next() {
            match c {
                '{' if open.is_none() => {
                    open = Some(k);
                    rest = &rest[1..];
                }
                '}' => {
                    let start = open.take().ok_or_else(|| bad("unmatched '}'"))?;
                    if start == k {
                        return Err(bad("empty chunk"));
                    }
                    chunks.push((start, k));
                    rest = &rest[1..];
                }
                '<' => {
                    let end = rest.find('>').ok_or_else(|| bad("unterminated tag"))?;
                    let tag = &rest[1..end];
                    if tokens.get(k).map(|t| t.tag().unwrap_or("")) != Some(tag) {
                        return Err(bad("tag does not match tokens"));
                    }
                    k += 1;
                    rest = &rest[end + 1..];
                }
                _ => return Err(bad("unexpected character")),
            }
        }
        if open.is_some() || k != tokens.len() {
            return Err(bad("unbalanced or incomplete encoding"));
        }
        Ok(ChunkStructure { tokens, chunks })
    }
}

impl fmt::Display for ChunkStructure {
    /// The bracketed text format: `[ the/DT cat/NN ] sat/VBD`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let mut chunks = self.chunks.iter().peekable();
        for (k, tok) in self.tokens.iter().enumerate() {
            if chunks.peek().is_some_and(|c| c.0 == k) {
                parts.push("[".into());
            }
            parts.push(tok.to_string());
            if chunks.peek().is_some_and(|c| c.1 == k + 1) {
                parts.push("]".into());
                chunks.next();
            }
        }
        f.write_str(&parts.join(" "))
    }
}

/// Parses one line of bracketed chunked text, `[ the/DT cat/NN ] sat/VBD`.
pub fn read_chunked(line: &str) -> Result<ChunkStructure, ChunkError> {
    let mut words = Vec::new();
    let mut chunks = Vec::new();
    let mut open = None;
    for item in line.split_whitespace() {
        match item {
            "[" if open.is_none() => open = Some(words.len()),
            "[" => return Err(ChunkError::MalformedChunkedText(format!("nested '[' in {line:?}"))),
            "]" => {
                let start = open.take().ok_or_else(|| ChunkError::MalformedChunkedText(format!("unmatched ']' in {line:?}")))?;
                if start < words.len() {
                    chunks.push((start, words.len()));
                }
            }
            word => words.push(word),
        }
    }
    if open.is_some() {
        return Err(ChunkError::MalformedChunkedText(format!("unclosed '[' in {line:?}")));
    }
    let tokens = read_tagged(&words.join(" "))?;
    Ok(ChunkStructure { tokens, chunks })
}

/// Reads a chunked corpus, one sentence per non-blank line.
pub fn read_chunked_corpus(text: &str) -> Result<Vec<ChunkStructure>, ChunkError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(read_chunked).collect()
}
