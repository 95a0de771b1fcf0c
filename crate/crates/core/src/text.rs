//! Tokens, locations and trees.
//!
//! Locations are token-indexed: the `k`th word of a sentence lives at
//! `k..k+1`. Chart spans use the same indices, so a tree's leaves can be
//! compared directly against edge spans.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    /// A tagged-text item without a `/` separator (or with an empty word or tag).
    #[error("malformed tagged item at position {0}")]
    MalformedTaggedItem(usize),
}

/// A half-open span of token positions, optionally tied to a source document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Location {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "location start {start} after end {end}");
        Location { start, end, source: None }
    }

    pub fn with_source(start: usize, end: usize, source: Option<String>) -> Self {
        Location { source, ..Location::new(start, end) }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// `None` when the two locations come from different sources.
    pub fn overlaps(&self, other: &Location) -> Option<bool> {
        if self.source != other.source {
            return None;
        }
        Some(!(self.end <= other.start || other.end <= self.start))
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// A word with its location and an optional part-of-speech tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    pub loc: Location,
}

impl TaggedToken {
    pub fn new(text: impl Into<String>, tag: Option<String>, loc: Location) -> Self {
        let text = text.into();
        debug_assert!(!text.is_empty() && !text.contains(char::is_whitespace));
        debug_assert!(tag.as_deref().is_none_or(|t| !t.is_empty()));
        TaggedToken { text, tag, loc }
    }

    /// An untagged token at token position `index`.
    pub fn word(text: impl Into<String>, index: usize) -> Self {
        TaggedToken::new(text, None, Location::new(index, index + 1))
    }

    pub fn tagged(text: impl Into<String>, tag: impl Into<String>, index: usize) -> Self {
        TaggedToken::new(text, Some(tag.into()), Location::new(index, index + 1))
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }
}

impl fmt::Display for TaggedToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tag {
            Some(tag) => write!(f, "{}/{}", self.text, tag),
            None => f.write_str(&self.text),
        }
    }
}

/// Splits on runs of whitespace; locations are 0-based token positions.
pub fn tokenize_whitespace(text: &str, source: Option<&str>) -> Vec<TaggedToken> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, w)| {
            let loc = Location::with_source(i, i + 1, source.map(str::to_owned));
            TaggedToken::new(w, None, loc)
        })
        .collect()
}

/// Reads `word/TAG` items separated by whitespace. The split happens on the
/// last slash, so `1/2/CD` is the word `1/2` tagged `CD`.
pub fn read_tagged(text: &str) -> Result<Vec<TaggedToken>, TextError> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, item)| {
            let (word, tag) = item.rsplit_once('/').filter(|(w, t)| !w.is_empty() && !t.is_empty()).ok_or(TextError::MalformedTaggedItem(i))?;
            Ok(TaggedToken::tagged(word, tag, i))
        })
        .collect()
}

/// Inverse of [`read_tagged`]; untagged tokens are written as bare words.
pub fn format_tagged(tokens: &[TaggedToken]) -> String {
    tokens.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// One child position of a [`Tree`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subtree {
    Tree(Tree),
    Leaf(TaggedToken),
    /// A symbol still to be found; used for partial trees of incomplete edges.
    Hole(String),
}

impl Subtree {
    /// The node label for a subtree, or the word for a leaf.
    pub fn label(&self) -> &str {
        match self {
            Subtree::Tree(t) => &t.node,
            Subtree::Leaf(tok) => &tok.text,
            Subtree::Hole(sym) => sym,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Subtree::Tree(t) => t.height(),
            Subtree::Leaf(_) | Subtree::Hole(_) => 1,
        }
    }
}

impl From<Tree> for Subtree {
    fn from(t: Tree) -> Self {
        Subtree::Tree(t)
    }
}

impl From<TaggedToken> for Subtree {
    fn from(t: TaggedToken) -> Self {
        Subtree::Leaf(t)
    }
}

/// An ordered labelled tree whose leaves are tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tree {
    pub node: String,
    pub children: Vec<Subtree>,
}

impl Tree {
    pub fn new(node: impl Into<String>, children: Vec<Subtree>) -> Self {
        Tree { node: node.into(), children }
    }

    pub fn leaf_count(&self) -> usize {
        self.children
            .iter()
            .map(|c| match c {
                Subtree::Tree(t) => t.leaf_count(),
                Subtree::Leaf(_) => 1,
                Subtree::Hole(_) => 0,
            })
            .sum()
    }

    /// Leaves in left-to-right order. Holes are not leaves.
    pub fn leaves(&self) -> Vec<&TaggedToken> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a TaggedToken>) {
        for child in &self.children {
            match child {
                Subtree::Tree(t) => t.collect_leaves(out),
                Subtree::Leaf(tok) => out.push(tok),
                Subtree::Hole(_) => {}
            }
        }
    }

    /// A childless node has height 1, as does a leaf.
    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Subtree::height).max().unwrap_or(0)
    }

    /// Calls `f` on this node and every descendant tree, pre-order.
    pub fn for_each_subtree<'a>(&'a self, f: &mut impl FnMut(&'a Tree)) {
        f(self);
        for child in &self.children {
            if let Subtree::Tree(t) = child {
                t.for_each_subtree(f);
            }
        }
    }
}

pub fn tree_leaves(t: &Tree) -> Vec<TaggedToken> {
    t.leaves().into_iter().cloned().collect()
}

pub fn tree_height(t: &Tree) -> usize {
    t.height()
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.node)?;
        for child in &self.children {
            match child {
                Subtree::Tree(t) => write!(f, " {t}")?,
                Subtree::Leaf(tok) => write!(f, " {}", tok.text)?,
                Subtree::Hole(sym) => write!(f, " {sym}?")?,
            }
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(tokens: &[TaggedToken]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn whitespace_tokenizer() {
        let toks = tokenize_whitespace("the dog barks", None);
        assert_eq!(texts(&toks), ["the", "dog", "barks"]);
        assert_eq!(toks[2].loc, Location::new(2, 3));
        assert!(tokenize_whitespace("", None).is_empty());

        let toks = tokenize_whitespace("  a  b ", Some("doc"));
        assert_eq!(texts(&toks), ["a", "b"]);
        assert_eq!(toks[1].loc, Location::with_source(1, 2, Some("doc".into())));
    }

    #[test]
    fn tagged_reader() {
        let toks = read_tagged("the/DT dog/NN").unwrap();
        assert_eq!(toks[0], TaggedToken::tagged("the", "DT", 0));
        assert_eq!(toks[1], TaggedToken::tagged("dog", "NN", 1));

        let toks = read_tagged("1/2/CD").unwrap();
        assert_eq!((toks[0].text.as_str(), toks[0].tag()), ("1/2", Some("CD")));

        assert_eq!(read_tagged("dog"), Err(TextError::MalformedTaggedItem(0)));
        assert_eq!(read_tagged("a/DT b/"), Err(TextError::MalformedTaggedItem(1)));
    }

    fn toy_tree() -> Tree {
        Tree::new(
            "S",
            vec![
                Tree::new("NP", vec![TaggedToken::word("the", 0).into(), TaggedToken::word("dog", 1).into()]).into(),
                Tree::new("VP", vec![TaggedToken::word("barks", 2).into()]).into(),
            ],
        )
    }

    #[test]
    fn leaves_and_height() {
        let t = toy_tree();
        assert_eq!(texts(&tree_leaves(&t)), ["the", "dog", "barks"]);
        assert_eq!(tree_height(&t), 3);
        assert_eq!(t.to_string(), "(S (NP the dog) (VP barks))");

        let single = Tree::new("S", vec![TaggedToken::word("hi", 0).into()]);
        assert_eq!(texts(&tree_leaves(&single)), ["hi"]);

        let chain = Tree::new("S", vec![Tree::new("NP", vec![Tree::new("N", vec![TaggedToken::word("dog", 0).into()]).into()]).into()]);
        assert_eq!(texts(&tree_leaves(&chain)), ["dog"]);
        assert_eq!(tree_height(&chain), 4);

        let np = Tree::new("S", vec![Tree::new("NP", vec![TaggedToken::word("dog", 0).into()]).into()]);
        assert_eq!(tree_height(&np), 3);
        assert_eq!(tree_height(&Tree::new("S", vec![])), 1);
        assert_eq!(Subtree::Leaf(TaggedToken::word("x", 0)).height(), 1);
    }

    #[test]
    fn location_overlap() {
        let a = Location::new(0, 2);
        assert_eq!(a.overlaps(&Location::new(2, 3)), Some(false));
        assert_eq!(a.overlaps(&Location::new(1, 3)), Some(true));
        assert_eq!(a.overlaps(&Location::with_source(0, 1, Some("x".into()))), None);
    }

    proptest! {
        #[test]
        fn tagged_round_trip(items in prop::collection::vec(("[a-z]{1,6}", "[A-Z]{1,3}\\$?"), 0..12)) {
            let tokens: Vec<_> = items.iter().enumerate()
                .map(|(i, (w, t))| TaggedToken::tagged(w.as_str(), t.as_str(), i)).collect();
            prop_assert_eq!(read_tagged(&format_tagged(&tokens)).unwrap(), tokens);
        }

        #[test]
        fn tokenize_is_idempotent(text in "[ a-z\\t\\n]{0,40}") {
            let once = tokenize_whitespace(&text, None);
            let joined = texts(&once).join(" ");
            prop_assert_eq!(tokenize_whitespace(&joined, None), once);
        }
    }
}
