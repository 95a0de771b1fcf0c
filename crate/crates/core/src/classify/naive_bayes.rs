use serde::{Deserialize, Serialize};

use crate::probability::{FreqDist, ProbDist};

use super::{label_counts, Classification, Classifier, ClassifyError, FeatureVector, TrainingSet, Vocabulary};

/// `P(c | x) ∝ P(c) · Π_{f ∈ x} P(f = 1 | c)`.
///
/// Only features that are present contribute, so an empty input falls back
/// to the prior. Priors are maximum-likelihood estimates; each likelihood is
/// a Lidstone estimate over the two outcomes present/absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    classes: Vec<String>,
    vocabulary: Vocabulary,
    gamma: f64,
    priors: Vec<f64>,
    /// `likelihoods[c][f] = P(f = 1 | c)`.
    likelihoods: Vec<Vec<f64>>,
}

fn presence_dist(present: u64, total: u64, gamma: f64) -> Result<ProbDist, ClassifyError> {
    let mut fd = FreqDist::new();
    if present > 0 {
        fd.increment_by("1", present);
    }
    if total > present {
        fd.increment_by("0", total - present);
    }
    ProbDist::lidstone(fd, gamma, 2).map_err(|_| ClassifyError::InvalidGamma(gamma))
}

pub fn train_naive_bayes(set: &TrainingSet, gamma: f64) -> Result<NaiveBayesModel, ClassifyError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(ClassifyError::InvalidGamma(gamma));
    }
    if set.examples().is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let counts = label_counts(set);
    if let Some((c, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(ClassifyError::MissingClass(c.to_string()));
    }
    let label_fd: FreqDist = set.examples().iter().map(|e| e.label.as_str()).collect();
    let prior_dist = ProbDist::mle(label_fd).map_err(|_| ClassifyError::EmptyCorpus)?;
    let priors = set.classes().iter().map(|c| prior_dist.prob(c)).collect();

    let f = set.vocabulary().len();
    let mut present = vec![vec![0u64; f]; set.classes().len()];
    for ex in set.examples() {
        let c = set.class_index(&ex.label);
        for &id in &ex.features {
            present[c][id] += 1;
        }
    }
    let likelihoods = set
        .classes()
        .iter()
        .zip(&present)
        .map(|(c, row)| row.iter().map(|&n| Ok(presence_dist(n, counts[c.as_str()], gamma)?.prob("1"))).collect())
        .collect::<Result<_, ClassifyError>>()?;
    Ok(NaiveBayesModel { classes: set.classes().to_vec(), vocabulary: set.vocabulary().clone(), gamma, priors, likelihoods })
}

impl NaiveBayesModel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn prior(&self, class: usize) -> f64 {
        self.priors[class]
    }

    pub fn likelihood(&self, class: usize, feature: usize) -> f64 {
        self.likelihoods[class][feature]
    }
}

impl Classifier for NaiveBayesModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn classify(&self, x: &FeatureVector) -> Classification {
        let scores: Vec<f64> = (0..self.classes.len())
            .map(|c| {
                let known = x.iter().filter(|&&f| f < self.vocabulary.len());
                self.priors[c].ln() + known.map(|&f| self.likelihoods[c][f].ln()).sum::<f64>()
            })
            .collect();
        Classification::from_log_scores(&self.classes, &scores)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{docs, vocab};
    use super::super::LabeledExample;
    use super::*;
    use proptest::prelude::*;

    fn toy() -> TrainingSet {
        TrainingSet::from_documents(&docs("pos\tf\npos\tf\nneg\t\nneg\t\n"), vocab(&["f"])).unwrap()
    }

    #[test]
    fn smoothed_likelihood_and_posterior() {
        let m = train_naive_bayes(&toy(), 1.0).unwrap();
        assert_eq!(m.likelihood(1, 0), 0.75);
        assert_eq!(m.likelihood(0, 0), 0.25);
        let out = m.classify(&FeatureVector::from([0]));
        assert_eq!(out.label, "pos");
        assert!((out.prob("pos") - 0.75).abs() < 1e-12);
        assert!((out.prob("neg") - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_input_uses_prior() {
        let set = TrainingSet::from_documents(&docs("a\tx\nb\tx\nb\ty\n"), vocab(&["x", "y"])).unwrap();
        let m = train_naive_bayes(&set, 0.5).unwrap();
        let out = m.classify(&FeatureVector::new());
        assert_eq!(out.label, "b");
        assert!((out.prob("b") - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn missing_class_and_bad_gamma() {
        let set =
            TrainingSet::new(vocab(&["f"]), vec!["neg".into(), "pos".into()], vec![LabeledExample { features: [0].into(), label: "pos".into() }])
                .unwrap();
        assert_eq!(train_naive_bayes(&set, 1.0), Err(ClassifyError::MissingClass("neg".into())));
        assert_eq!(train_naive_bayes(&toy(), -1.0), Err(ClassifyError::InvalidGamma(-1.0)));
    }

    #[test]
    fn ties_go_to_first_class() {
        let set = TrainingSet::from_documents(&docs("b\tx\na\tx\n"), vocab(&["x"])).unwrap();
        let out = train_naive_bayes(&set, 1.0).unwrap().classify(&FeatureVector::from([0]));
        assert_eq!(out.label, "a");
        assert_eq!(out.prob("a"), 0.5);
    }

    proptest! {
        #[test]
        fn posteriors_normalized_and_strictly_inside(
            rows in prop::collection::vec((prop::sample::select(vec!["a", "b", "c"]), prop::collection::btree_set(0usize..4, 0..4)), 3..12),
            gamma in 0.01f64..2.0,
            x in prop::collection::btree_set(0usize..4, 0..4),
        ) {
            let examples: Vec<LabeledExample> = rows.iter().map(|(l, f)| LabeledExample { features: f.clone(), label: l.to_string() }).collect();
            let classes: Vec<String> = rows.iter().map(|(l, _)| l.to_string()).collect();
            let set = TrainingSet::new(vocab(&["w", "x", "y", "z"]), classes, examples).unwrap();
            let m = train_naive_bayes(&set, gamma).unwrap();
            let out = m.classify(&x);
            let total: f64 = out.posterior.iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            if out.posterior.len() > 1 {
                prop_assert!(out.posterior.iter().all(|&(_, p)| p > 0.0 && p < 1.0));
            }
        }
    }
}
