//! Conditional maximum-entropy models trained by iterative scaling.
//!
//! Joint features are pairs `(f, c)` of an input feature and a class:
//! `f_(f,c)(x, c') = 1` iff `f ∈ x` and `c' = c`. The model is
//!
//! ```text
//! P(c | x) ∝ exp(Σ_{f ∈ x} λ[f][c])
//! ```
//!
//! and training adjusts `λ` until every model expectation
//! `E_model[f_j] = (1/N) Σ_x Σ_c P(c | x) f_j(x, c)` matches the empirical
//! expectation `E_emp[f_j] = (1/N) Σ_(x, c) f_j(x, c)`.
//!
//! A pair that never occurs in training has `E_emp = 0`, which no finite
//! weight can reach. Such pairs are excluded: their weight is fixed at −∞,
//! so the class is ruled out whenever the feature is present.
//!
//! * **GIS** adds a correction feature `C − |x|` so that every `(x, c)` has
//!   the same feature total `C`, then updates `λ_j += ln(E_emp / E_model) / C`.
//! * **IIS** solves, for each feature separately,
//!   `Σ_m A_(j,m) · e^(δ m) = E_emp[f_j]`, where `A_(j,m)` is the model
//!   expectation of `f_j` restricted to inputs with `m` active features. The
//!   left side is increasing in `δ`, so bisection finds the root.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Classification, Classifier, ClassifyError, FeatureVector, TrainingSet, Vocabulary};

const BISECTION_STEPS: usize = 50;
const BISECTION_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxentAlgorithm {
    Gis,
    Iis,
}

impl fmt::Display for MaxentAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaxentAlgorithm::Gis => "gis",
            MaxentAlgorithm::Iis => "iis",
        })
    }
}

impl FromStr for MaxentAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gis" => Ok(MaxentAlgorithm::Gis),
            "iis" => Ok(MaxentAlgorithm::Iis),
            other => Err(format!("unknown maxent algorithm {other:?} (expected gis or iis)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxentOptions {
    pub algorithm: MaxentAlgorithm,
    pub max_iter: usize,
    /// Training stops once every retained feature satisfies
    /// `|E_emp − E_model| < tol`.
    pub tol: f64,
}

impl Default for MaxentOptions {
    fn default() -> Self {
        MaxentOptions { algorithm: MaxentAlgorithm::Gis, max_iter: 100, tol: 1e-4 }
    }
}

impl MaxentOptions {
    pub fn new(algorithm: MaxentAlgorithm) -> Self {
        MaxentOptions { algorithm, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub algorithm: MaxentAlgorithm,
    pub iterations: usize,
    pub converged: bool,
    pub final_violation: f64,
    /// Maximum constraint violation before training and after each iteration.
    pub history: Vec<f64>,
    /// `(word, class)` pairs with no training occurrences.
    pub excluded: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxentModel {
    classes: Vec<String>,
    vocabulary: Vocabulary,
    /// `weights[f][c]`; entries listed in `excluded` are ignored.
    weights: Vec<Vec<f64>>,
    excluded: BTreeSet<(usize, usize)>,
    correction_weight: f64,
    correction_constant: f64,
    meta: TrainingMeta,
}

impl MaxentModel {
    fn uniform(set: &TrainingSet, algorithm: MaxentAlgorithm) -> Self {
        MaxentModel {
            classes: set.classes().to_vec(),
            vocabulary: set.vocabulary().clone(),
            weights: vec![vec![0.0; set.classes().len()]; set.vocabulary().len()],
            excluded: BTreeSet::new(),
            correction_weight: 0.0,
            correction_constant: 0.0,
            meta: TrainingMeta { algorithm, iterations: 0, converged: true, final_violation: 0.0, history: Vec::new(), excluded: Vec::new() },
        }
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// `None` for an excluded pair, whose weight is −∞.
    pub fn weight(&self, feature: usize, class: usize) -> Option<f64> {
        (!self.excluded.contains(&(feature, class))).then(|| self.weights[feature][class])
    }

    pub fn is_excluded(&self, feature: usize, class: usize) -> bool {
        self.excluded.contains(&(feature, class))
    }

    fn log_scores(&self, x: &FeatureVector, honour_exclusions: bool) -> Vec<f64> {
        let known: Vec<usize> = x.iter().copied().filter(|&f| f < self.vocabulary.len()).collect();
        let correction = self.correction_weight * (self.correction_constant - known.len() as f64);
        (0..self.classes.len())
            .map(|c| {
                known.iter().fold(correction, |acc, &f| {
                    if !self.excluded.contains(&(f, c)) {
                        acc + self.weights[f][c]
                    } else if honour_exclusions {
                        f64::NEG_INFINITY
                    } else {
                        acc
                    }
                })
            })
            .collect()
    }

    /// `P(c | x)` for every class, in class order.
    pub fn posterior(&self, x: &FeatureVector) -> Vec<f64> {
        self.classify(x).posterior.into_iter().map(|(_, p)| p).collect()
    }

    /// Model expectation of every `(f, c)` pair over the training inputs.
    pub fn expectations(&self, set: &TrainingSet) -> Vec<Vec<f64>> {
        let n = set.examples().len() as f64;
        let mut e = vec![vec![0.0; self.classes.len()]; self.vocabulary.len()];
        for ex in set.examples() {
            let post = self.posterior(&ex.features);
            for &f in &ex.features {
                for (c, p) in post.iter().enumerate() {
                    e[f][c] += p / n;
                }
            }
        }
        e
    }

    /// Largest `|E_emp − E_model|` over the retained features.
    pub fn max_violation(&self, set: &TrainingSet) -> f64 {
        max_violation(&empirical(set), &self.expectations(set), &self.excluded)
    }
}

impl Classifier for MaxentModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// If the input rules out every class, the exclusions are ignored and
    /// the remaining weights decide.
    fn classify(&self, x: &FeatureVector) -> Classification {
        let mut scores = self.log_scores(x, true);
        if scores.iter().all(|s| *s == f64::NEG_INFINITY) {
            scores = self.log_scores(x, false);
        }
        Classification::from_log_scores(&self.classes, &scores)
    }
}

/// `E_emp[(f, c)]` as a `[f][c]` table.
fn empirical(set: &TrainingSet) -> Vec<Vec<f64>> {
    let n = set.examples().len() as f64;
    let mut e = vec![vec![0.0; set.classes().len()]; set.vocabulary().len()];
    for ex in set.examples() {
        let c = set.class_index(&ex.label);
        for &f in &ex.features {
            e[f][c] += 1.0 / n;
        }
    }
    e
}

fn max_violation(emp: &[Vec<f64>], model: &[Vec<f64>], excluded: &BTreeSet<(usize, usize)>) -> f64 {
    let mut worst: f64 = 0.0;
    for (f, row) in emp.iter().enumerate() {
        for (c, &e) in row.iter().enumerate() {
            if !excluded.contains(&(f, c)) {
                worst = worst.max((e - model[f][c]).abs());
            }
        }
    }
    worst
}

/// Root of the increasing function `g` by bracketing then bisection.
fn bisect(g: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..64 {
        if g(lo) <= 0.0 {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..64 {
        if g(hi) >= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..BISECTION_STEPS {
        if hi - lo < BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn train_maxent(set: &TrainingSet, options: MaxentOptions) -> Result<MaxentModel, ClassifyError> {
    if set.examples().is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let mut model = MaxentModel::uniform(set, options.algorithm);
    let emp = empirical(set);
    let used: BTreeSet<usize> = set.examples().iter().flat_map(|e| e.features.iter().copied()).collect();
    for &f in &used {
        for (c, class) in set.classes().iter().enumerate() {
            if emp[f][c] == 0.0 {
                let word = set.vocabulary().words()[f].clone();
                log::warn!("feature ({word}, {class}) never occurs in training; excluded");
                model.excluded.insert((f, c));
                model.meta.excluded.push((word, class.clone()));
            }
        }
    }
    // Features that never occur are trivially satisfied at weight zero.
    let retained: Vec<(usize, usize)> =
        used.iter().flat_map(|&f| (0..set.classes().len()).map(move |c| (f, c))).filter(|j| !model.excluded.contains(j)).collect();

    let n = set.examples().len() as f64;
    let c_max = set.examples().iter().map(|e| e.features.len()).max().unwrap_or(0) as f64;
    model.correction_constant = c_max;
    let correction_emp: f64 = set.examples().iter().map(|e| (c_max - e.features.len() as f64) / n).sum();

    let mut expected = model.expectations(set);
    let mut history = vec![max_violation(&emp, &expected, &model.excluded)];
    while *history.last().unwrap() >= options.tol && history.len() <= options.max_iter && !retained.is_empty() {
        match options.algorithm {
            MaxentAlgorithm::Gis => {
                for &(f, c) in &retained {
                    model.weights[f][c] += (emp[f][c] / expected[f][c]).ln() / c_max;
                }
                if correction_emp > 0.0 {
                    let correction_model: f64 =
                        set.examples().iter().map(|e| model.posterior(&e.features).iter().sum::<f64>() * (c_max - e.features.len() as f64) / n).sum();
                    model.correction_weight += (correction_emp / correction_model).ln() / c_max;
                }
            }
            MaxentAlgorithm::Iis => {
                // a[f][c][m]: model expectation of (f, c) from inputs with m features.
                let width = c_max as usize + 1;
                let mut a = vec![vec![vec![0.0; width]; set.classes().len()]; set.vocabulary().len()];
                for ex in set.examples() {
                    let m = ex.features.len();
                    let post = model.posterior(&ex.features);
                    for &f in &ex.features {
                        for (c, p) in post.iter().enumerate() {
                            a[f][c][m] += p / n;
                        }
                    }
                }
                let deltas: Vec<f64> = retained
                    .iter()
                    .map(|&(f, c)| {
                        let parts = &a[f][c];
                        bisect(|d| parts.iter().enumerate().map(|(m, &am)| am * (d * m as f64).exp()).sum::<f64>() - emp[f][c])
                    })
                    .collect();
                for (&(f, c), d) in retained.iter().zip(deltas) {
                    model.weights[f][c] += d;
                }
            }
        }
        expected = model.expectations(set);
        history.push(max_violation(&emp, &expected, &model.excluded));
    }
    let last = *history.last().unwrap();
    model.meta.iterations = history.len() - 1;
    model.meta.converged = last < options.tol;
    model.meta.final_violation = last;
    model.meta.history = history;
    if !model.meta.converged {
        log::warn!("maxent stopped after {} iterations with violation {last:e}", model.meta.iterations);
    }
    Ok(model)
}
