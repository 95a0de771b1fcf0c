//! Text classification over binary presence features.
//!
//! Documents are encoded against a fixed [`Vocabulary`]: feature `i` is on
//! when the document contains `vocabulary[i]`. Classes are kept in
//! lexicographic order and posterior ties go to the first class.

mod maxent;
mod naive_bayes;

pub use maxent::{train_maxent, MaxentAlgorithm, MaxentModel, MaxentOptions, TrainingMeta};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probability::FreqDist;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("class {0:?} has no training examples")]
    MissingClass(String),
    #[error("label {0:?} is not a declared class")]
    UnknownLabel(String),
    #[error("feature id {id} is outside a vocabulary of {size}")]
    FeatureOutOfRange { id: usize, size: usize },
    #[error("line {0}: expected `label<TAB>tokens`")]
    MalformedLine(usize),
    #[error("invalid smoothing parameter {0}")]
    InvalidGamma(f64),
}

/// Ids of the features that are on.
pub type FeatureVector = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        let mut index = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            index.entry(w.clone()).or_insert(i);
        }
        Vocabulary { words, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

impl Vocabulary {
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Binary presence encoding; words outside the vocabulary are ignored.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocabulary: &Vocabulary) -> FeatureVector {
    tokens.iter().filter_map(|t| vocabulary.id(t.as_ref())).collect()
}

/// A labelled token sequence, one line of `label<TAB>token token ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub label: String,
    pub tokens: Vec<String>,
}

pub fn read_documents(text: &str) -> Result<Vec<Document>, ClassifyError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let (label, rest) = line.split_once('\t').ok_or(ClassifyError::MalformedLine(n + 1))?;
            let label = label.trim();
            if label.is_empty() {
                return Err(ClassifyError::MalformedLine(n + 1));
            }
            Ok(Document { label: label.to_owned(), tokens: rest.split_whitespace().map(str::to_owned).collect() })
        })
        .collect()
}

/// Words occurring at least `cutoff` times, most frequent first, at most
/// `budget` of them. Equal counts are ordered lexicographically.
pub fn select_features(corpus: &[Document], cutoff: u64, budget: usize) -> Result<Vocabulary, ClassifyError> {
    if corpus.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let counts: FreqDist = corpus.iter().flat_map(|d| d.tokens.iter()).collect();
    let mut ranked: Vec<(&str, u64)> = counts.iter().filter(|&(_, n)| n >= cutoff).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Ok(ranked.into_iter().take(budget).map(|(w, _)| w.to_owned()).collect::<Vec<_>>().into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: String,
}

/// Encoded examples together with their vocabulary and declared classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    vocabulary: Vocabulary,
    classes: Vec<String>,
    examples: Vec<LabeledExample>,
}

impl TrainingSet {
    /// Classes are sorted and deduplicated. Every label must be declared and
    /// every feature id must be inside the vocabulary.
    pub fn new(vocabulary: Vocabulary, classes: Vec<String>, examples: Vec<LabeledExample>) -> Result<Self, ClassifyError> {
        let classes: Vec<String> = classes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        for ex in &examples {
            if classes.binary_search(&ex.label).is_err() {
                return Err(ClassifyError::UnknownLabel(ex.label.clone()));
            }
            if let Some(&id) = ex.features.iter().find(|&&id| id >= vocabulary.len()) {
                return Err(ClassifyError::FeatureOutOfRange { id, size: vocabulary.len() });
            }
        }
        Ok(TrainingSet { vocabulary, classes, examples })
    }

    /// Encodes documents; the classes are exactly the labels that occur.
    pub fn from_documents(docs: &[Document], vocabulary: Vocabulary) -> Result<Self, ClassifyError> {
        if docs.is_empty() {
            return Err(ClassifyError::EmptyCorpus);
        }
        let classes = docs.iter().map(|d| d.label.clone()).collect();
        let examples = docs.iter().map(|d| LabeledExample { features: encode(&d.tokens, &vocabulary), label: d.label.clone() }).collect();
        TrainingSet::new(vocabulary, classes, examples)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    fn class_index(&self, label: &str) -> usize {
        self.classes.binary_search_by(|c| c.as_str().cmp(label)).expect("labels validated on construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    /// Every class with its posterior probability, in class order.
    pub posterior: Vec<(String, f64)>,
}

impl Classification {
    /// Normalizes log-scores; ties go to the earliest class.
    fn from_log_scores(classes: &[String], scores: &[f64]) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        let posterior: Vec<(String, f64)> = classes.iter().cloned().zip(exp.iter().map(|e| e / z)).collect();
        let mut best = 0;
        for (i, &(_, p)) in posterior.iter().enumerate() {
            if p > posterior[best].1 {
                best = i;
            }
        }
        Classification { label: posterior[best].0.clone(), posterior }
    }

    pub fn prob(&self, label: &str) -> f64 {
        self.posterior.iter().find(|(c, _)| c == label).map_or(0.0, |&(_, p)| p)
    }
}

pub trait Classifier {
    fn classes(&self) -> &[String];
    fn vocabulary(&self) -> &Vocabulary;
    fn classify(&self, x: &FeatureVector) -> Classification;

    fn classify_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Classification
    where
        Self: Sized,
    {
        self.classify(&encode(tokens, self.vocabulary()))
    }
}

/// A trained model in its saved form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum Model {
    NaiveBayes(NaiveBayesModel),
    Maxent(MaxentModel),
}

impl Classifier for Model {
    fn classes(&self) -> &[String] {
        match self {
            Model::NaiveBayes(m) => m.classes(),
            Model::Maxent(m) => m.classes(),
        }
    }

    fn vocabulary(&self) -> &Vocabulary {
        match self {
            Model::NaiveBayes(m) => m.vocabulary(),
            Model::Maxent(m) => m.vocabulary(),
        }
    }

    fn classify(&self, x: &FeatureVector) -> Classification {
        match self {
            Model::NaiveBayes(m) => m.classify(x),
            Model::Maxent(m) => m.classify(x),
        }
    }
}

/// Fraction of documents whose predicted label matches.
pub fn accuracy(model: &impl Classifier, docs: &[Document]) -> Result<f64, ClassifyError> {
    if docs.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let hits = docs.iter().filter(|d| model.classify(&encode(&d.tokens, model.vocabulary())).label == d.label).count();
    Ok(hits as f64 / docs.len() as f64)
}

/// Per-class label counts, used for priors.
fn label_counts(set: &TrainingSet) -> BTreeMap<&str, u64> {
    let mut counts: BTreeMap<&str, u64> = set.classes.iter().map(|c| (c.as_str(), 0)).collect();
    for ex in &set.examples {
        *counts.get_mut(ex.label.as_str()).expect("validated label") += 1;
    }
    counts
}
