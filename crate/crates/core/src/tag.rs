//! Part-of-speech taggers with backoff chaining.
//!
//! A [`TaggerSpec`] is plain data that can be saved as JSON. Compiling it
//! into a [`Tagger`] checks the regular expressions once; tagging itself
//! never fails. A stage that has no answer for a word defers to its backoff,
//! and a word nothing can tag receives [`UNKNOWN_TAG`].

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probability::CondFreqDist;
use crate::text::TaggedToken;

pub const UNKNOWN_TAG: &str = "UNK";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TagError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("token {index} has no gold tag")]
    UntaggedGold { index: usize },
    #[error("bad tagger pattern {pattern:?}: {message}")]
    PatternSyntax { pattern: String, message: String },
}

/// One line of a regexp tagger file: `{"pattern": ".*ing$", "tag": "VBG"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegexpRule {
    pub pattern: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TaggerKind {
    Default(String),
    Regexp(Vec<RegexpRule>),
    Unigram(CondFreqDist),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerSpec {
    pub kind: TaggerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backoff: Option<Box<TaggerSpec>>,
}

impl TaggerSpec {
    pub fn default_tag(tag: &str) -> Self {
        TaggerSpec { kind: TaggerKind::Default(tag.to_owned()), backoff: None }
    }

    pub fn regexp<P: AsRef<str>, T: AsRef<str>>(rules: &[(P, T)]) -> Self {
        let rules = rules.iter().map(|(p, t)| RegexpRule { pattern: p.as_ref().to_owned(), tag: t.as_ref().to_owned() }).collect();
        TaggerSpec { kind: TaggerKind::Regexp(rules), backoff: None }
    }

    /// Appends `backoff` at the end of this chain.
    pub fn with_backoff(mut self, backoff: TaggerSpec) -> Self {
        match self.backoff {
            Some(inner) => self.backoff = Some(Box::new(inner.with_backoff(backoff))),
            None => self.backoff = Some(Box::new(backoff)),
        }
        self
    }

    pub fn compile(&self) -> Result<Tagger, TagError> {
        Tagger::new(self)
    }
}

/// Counts word/tag pairs over a tagged corpus.
pub fn train_unigram(corpus: &[Vec<TaggedToken>]) -> Result<TaggerSpec, TagError> {
    let mut counts = CondFreqDist::new();
    for (index, tok) in corpus.iter().flatten().enumerate() {
        let tag = tok.tag().ok_or(TagError::UntaggedGold { index })?;
        counts.increment(&tok.text, tag);
    }
    if counts.is_empty() {
        return Err(TagError::EmptyCorpus);
    }
    Ok(TaggerSpec { kind: TaggerKind::Unigram(counts), backoff: None })
}

#[derive(Debug, Clone)]
enum Stage {
    Default(String),
    Regexp(Vec<(Regex, String)>),
    /// Majority tag per word, resolved once at compile time.
    Unigram(std::collections::HashMap<String, String>),
}

impl Stage {
    fn tag_word(&self, word: &str) -> Option<&str> {
        match self {
            Stage::Default(tag) => Some(tag),
            Stage::Regexp(rules) => rules.iter().find(|(re, _)| re.is_match(word)).map(|(_, t)| t.as_str()),
            Stage::Unigram(best) => best.get(word).map(String::as_str),
        }
    }
}

/// A compiled tagger chain, first stage first.
#[derive(Debug, Clone)]
pub struct Tagger {
    stages: Vec<Stage>,
}

impl Tagger {
    pub fn new(spec: &TaggerSpec) -> Result<Self, TagError> {
        let mut stages = Vec::new();
        let mut cur = Some(spec);
        while let Some(s) = cur {
            stages.push(match &s.kind {
                TaggerKind::Default(tag) => Stage::Default(tag.clone()),
                TaggerKind::Regexp(rules) => Stage::Regexp(
                    rules
                        .iter()
                        .map(|r| {
                            // Patterns are tried from the start of the word, not searched for.
                            Regex::new(&format!("^(?:{})", r.pattern))
                                .map(|re| (re, r.tag.clone()))
                                .map_err(|e| TagError::PatternSyntax { pattern: r.pattern.clone(), message: e.to_string() })
                        })
                        .collect::<Result<_, _>>()?,
                ),
                TaggerKind::Unigram(counts) => {
                    Stage::Unigram(counts.conditions().filter_map(|w| Some((w.to_owned(), counts.get(w)?.max().ok()?.to_owned()))).collect())
                }
            });
            cur = s.backoff.as_deref();
        }
        Ok(Tagger { stages })
    }

    pub fn tag_word(&self, word: &str) -> &str {
        self.stages.iter().find_map(|s| s.tag_word(word)).unwrap_or(UNKNOWN_TAG)
    }

    /// Same tokens in the same order, each with a tag. Existing tags are replaced.
    pub fn tag(&self, tokens: &[TaggedToken]) -> Vec<TaggedToken> {
        tokens.iter().map(|t| TaggedToken { tag: Some(self.tag_word(&t.text).to_owned()), ..t.clone() }).collect()
    }
}

pub fn tag(tagger: &Tagger, tokens: &[TaggedToken]) -> Vec<TaggedToken> {
    tagger.tag(tokens)
}

/// Fraction of gold tokens whose assigned tag equals the gold tag.
pub fn evaluate_tagger(tagger: &Tagger, gold: &[Vec<TaggedToken>]) -> Result<f64, TagError> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for tok in gold.iter().flatten() {
        let expected = tok.tag().ok_or(TagError::UntaggedGold { index: total })?;
        correct += usize::from(tagger.tag_word(&tok.text) == expected);
        total += 1;
    }
    if total == 0 {
        return Err(TagError::EmptyCorpus);
    }
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{read_tagged, tokenize_whitespace};
    use proptest::prelude::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<TaggedToken>> {
        lines.iter().map(|l| read_tagged(l).unwrap()).collect()
    }

    fn tags(tokens: &[TaggedToken]) -> Vec<&str> {
        tokens.iter().map(|t| t.tag().unwrap()).collect()
    }

    #[test]
    fn default_tags_everything() {
        let t = TaggerSpec::default_tag("NN").compile().unwrap();
        assert_eq!(tags(&t.tag(&tokenize_whitespace("dog runs", None))), ["NN", "NN"]);
    }

    #[test]
    fn regexp_first_match_then_backoff() {
        let spec = TaggerSpec::regexp(&[(".*ing$", "VBG"), (".*s$", "NNS")]).with_backoff(TaggerSpec::default_tag("NN"));
        let t = spec.compile().unwrap();
        assert_eq!(tags(&t.tag(&tokenize_whitespace("running dog dogs singing", None))), ["VBG", "NN", "NNS", "VBG"]);
        // Anchored at the start of the word.
        let t = TaggerSpec::regexp(&[("ing", "VBG")]).compile().unwrap();
        assert_eq!(t.tag_word("ingot"), "VBG");
        assert_eq!(t.tag_word("sing"), UNKNOWN_TAG);
        assert!(matches!(TaggerSpec::regexp(&[("(", "X")]).compile(), Err(TagError::PatternSyntax { .. })));
    }

    #[test]
    fn unigram_majority_and_ties() {
        let spec = train_unigram(&corpus(&["the/DT dog/NN the/DT", "run/VB run/NN"])).unwrap();
        let t = spec.compile().unwrap();
        assert_eq!(t.tag_word("the"), "DT");
        assert_eq!(t.tag_word("run"), "NN");
        assert_eq!(t.tag_word("cat"), UNKNOWN_TAG);
        let t = spec.with_backoff(TaggerSpec::default_tag("NN")).compile().unwrap();
        assert_eq!(t.tag_word("cat"), "NN");
        assert_eq!(train_unigram(&[]), Err(TagError::EmptyCorpus));
        assert_eq!(train_unigram(&[vec![]]), Err(TagError::EmptyCorpus));
    }

    #[test]
    fn evaluation_counts_tokens() {
        let gold = corpus(&["a/DT b/NN c/VB d/NN e/JJ", "f/NN g/VB h/VB i/IN j/DT"]);
        let t = TaggerSpec::default_tag("NN").compile().unwrap();
        assert!((evaluate_tagger(&t, &gold).unwrap() - 0.3).abs() < 1e-15);
        let uni = train_unigram(&gold).unwrap().compile().unwrap();
        assert_eq!(evaluate_tagger(&uni, &gold).unwrap(), 1.0);
        assert_eq!(evaluate_tagger(&t, &[]), Err(TagError::EmptyCorpus));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = train_unigram(&corpus(&["the/DT dog/NN"]))
            .unwrap()
            .with_backoff(TaggerSpec::regexp(&[(".*ing$", "VBG")]))
            .with_backoff(TaggerSpec::default_tag("NN"));
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<TaggerSpec>(&json).unwrap(), spec);
        let rules: Vec<RegexpRule> = serde_json::from_str(r#"[{"pattern":".*ed$","tag":"VBD"}]"#).unwrap();
        assert_eq!(rules[0].tag, "VBD");
    }

    fn tagged_corpus() -> impl Strategy<Value = Vec<Vec<TaggedToken>>> {
        let tok = (prop::sample::select(vec!["the", "dog", "run", "fish", "a", "saw"]), prop::sample::select(vec!["DT", "NN", "VB"]));
        prop::collection::vec(prop::collection::vec(tok, 1..6), 1..5).prop_map(|sents| {
            sents.into_iter().map(|s| s.into_iter().enumerate().map(|(i, (w, t))| TaggedToken::tagged(w, t, i)).collect()).collect()
        })
    }

    proptest! {
        #[test]
        fn tagging_preserves_tokens(words in prop::collection::vec("[a-z]{1,5}", 0..8)) {
            let toks: Vec<TaggedToken> = words.iter().enumerate().map(|(i, w)| TaggedToken::word(w.as_str(), i)).collect();
            let t = TaggerSpec::regexp(&[("a.*", "X")]).compile().unwrap();
            let out = t.tag(&toks);
            prop_assert_eq!(out.len(), toks.len());
            for (a, b) in out.iter().zip(&toks) {
                prop_assert_eq!(&a.text, &b.text);
                prop_assert_eq!(&a.loc, &b.loc);
            }
        }

        #[test]
        fn unigram_with_backoff_beats_default(c in tagged_corpus()) {
            let default = TaggerSpec::default_tag("NN");
            let uni = train_unigram(&c).unwrap().with_backoff(default.clone()).compile().unwrap();
            let base = evaluate_tagger(&default.compile().unwrap(), &c).unwrap();
            prop_assert!(evaluate_tagger(&uni, &c).unwrap() >= base);
        }

        #[test]
        fn training_reproduces_majority_tag(c in tagged_corpus()) {
            let t = train_unigram(&c).unwrap().compile().unwrap();
            let mut counts: std::collections::BTreeMap<(&str, &str), usize> = Default::default();
            for tok in c.iter().flatten() {
                *counts.entry((tok.text.as_str(), tok.tag().unwrap())).or_default() += 1;
            }
            for tok in c.iter().flatten() {
                let assigned = t.tag_word(&tok.text);
                let best = counts.iter().filter(|((w, _), _)| *w == tok.text).map(|(_, n)| *n).max().unwrap();
                prop_assert_eq!(counts[&(tok.text.as_str(), assigned)], best);
            }
        }
    }
}
