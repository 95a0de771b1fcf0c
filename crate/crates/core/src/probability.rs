//! Frequency distributions and the probability estimates built from them.
//!
//! Two estimators are provided. Maximum likelihood uses `count / N`. The
//! Lidstone family uses `(count + γ) / (N + γ·B)`, where `B` is the number of
//! bins (possible outcomes) and is supplied by the caller. Laplace (γ = 1) and
//! expected likelihood (γ = 0.5) are named presets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbabilityError {
    #[error("distribution has no samples")]
    EmptyDistribution,
    #[error("invalid bin count {bins} for {observed} observed outcomes")]
    InvalidBins { bins: usize, observed: usize },
    #[error("smoothing parameter must be positive and finite, got {0}")]
    InvalidGamma(f64),
}

/// The exact relative frequency `count / total` of an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frequency {
    pub count: u64,
    pub total: u64,
}

impl Frequency {
    /// Zero when the distribution is empty.
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count as f64 / self.total as f64
        }
    }
}

/// Counts of experiment outcomes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqDist {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FreqDist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&mut self, outcome: &str) {
        self.increment_by(outcome, 1);
    }

    pub fn increment_by(&mut self, outcome: &str, by: u64) {
        assert!(by >= 1, "increment must be positive");
        *self.counts.entry(outcome.to_owned()).or_insert(0) += by;
        self.total += by;
    }

    pub fn count(&self, outcome: &str) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    /// Total number of samples (`N`).
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct outcomes with a non-zero count.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn freq(&self, outcome: &str) -> Frequency {
        Frequency { count: self.count(outcome), total: self.total }
    }

    /// The most frequent outcome; ties go to the lexicographically smallest.
    pub fn max(&self) -> Result<&str, ProbabilityError> {
        // BTreeMap iterates in ascending key order, so keeping the first
        // strict maximum gives the lexicographic tie-break.
        let mut best: Option<(&str, u64)> = None;
        for (outcome, &count) in &self.counts {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((outcome, count));
            }
        }
        best.map(|(o, _)| o).ok_or(ProbabilityError::EmptyDistribution)
    }

    /// Observed outcomes in lexicographic order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl<S: AsRef<str>> FromIterator<S> for FreqDist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut fd = FreqDist::new();
        for outcome in iter {
            fd.increment(outcome.as_ref());
        }
        fd
    }
}

/// A frequency distribution per condition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondFreqDist {
    table: BTreeMap<String, FreqDist>,
}

impl CondFreqDist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&mut self, condition: &str, outcome: &str) {
        self.table.entry(condition.to_owned()).or_default().increment(outcome);
    }

    pub fn get(&self, condition: &str) -> Option<&FreqDist> {
        self.table.get(condition)
    }

    pub fn conditions(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimator {
    Mle,
    Lidstone(f64),
}

/// A probability estimate over `bins` outcomes derived from a [`FreqDist`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    estimator: Estimator,
    base: FreqDist,
    bins: usize,
}

impl ProbDist {
    /// Maximum likelihood estimate; the bins are exactly the observed outcomes.
    pub fn mle(base: FreqDist) -> Result<Self, ProbabilityError> {
        if base.is_empty() {
            return Err(ProbabilityError::EmptyDistribution);
        }
        let bins = base.distinct();
        Ok(ProbDist { estimator: Estimator::Mle, base, bins })
    }

    pub fn lidstone(base: FreqDist, gamma: f64, bins: usize) -> Result<Self, ProbabilityError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ProbabilityError::InvalidGamma(gamma));
        }
        if bins == 0 || bins < base.distinct() {
            return Err(ProbabilityError::InvalidBins { bins, observed: base.distinct() });
        }
        Ok(ProbDist { estimator: Estimator::Lidstone(gamma), base, bins })
    }

    pub fn laplace(base: FreqDist, bins: usize) -> Result<Self, ProbabilityError> {
        Self::lidstone(base, 1.0, bins)
    }

    /// Expected likelihood estimate, Lidstone with γ = 0.5.
    pub fn ele(base: FreqDist, bins: usize) -> Result<Self, ProbabilityError> {
        Self::lidstone(base, 0.5, bins)
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn base(&self) -> &FreqDist {
        &self.base
    }

    pub fn prob(&self, outcome: &str) -> f64 {
        let count = self.base.count(outcome) as f64;
        let n = self.base.total() as f64;
        match self.estimator {
            Estimator::Mle => count / n,
            Estimator::Lidstone(gamma) => (count + gamma) / (n + gamma * self.bins as f64),
        }
    }

    /// Probability of any single outcome that was never observed.
    pub fn unseen_prob(&self) -> f64 {
        match self.estimator {
            Estimator::Mle => 0.0,
            Estimator::Lidstone(gamma) => gamma / (self.base.total() as f64 + gamma * self.bins as f64),
        }
    }

    /// Sum of the estimate over all bins: observed outcomes plus the unseen remainder.
    pub fn total_mass(&self) -> f64 {
        let observed: f64 = self.base.iter().map(|(o, _)| self.prob(o)).sum();
        let unseen_bins = (self.bins - self.base.distinct()) as f64;
        observed + unseen_bins * self.unseen_prob()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd(items: &[(&str, u64)]) -> FreqDist {
        let mut fd = FreqDist::new();
        for &(o, c) in items {
            fd.increment_by(o, c);
        }
        fd
    }

    #[test]
    fn increments() {
        let mut d = FreqDist::new();
        d.increment("a");
        assert_eq!((d.count("a"), d.total()), (1, 1));
        d.increment("a");
        d.increment("a");
        assert_eq!((d.count("a"), d.total()), (3, 3));
        d.increment("b");
        assert_eq!((d.count("b"), d.total(), d.distinct()), (1, 4, 2));
    }

    #[test]
    fn frequencies() {
        let d = fd(&[("a", 2), ("b", 1)]);
        assert_eq!(d.freq("a"), Frequency { count: 2, total: 3 });
        assert!((d.freq("a").value() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(FreqDist::new().freq("a").value(), 0.0);
        assert_eq!(fd(&[("a", 5)]).freq("b").value(), 0.0);
    }

    #[test]
    fn max_with_ties() {
        assert_eq!(fd(&[("a", 2), ("b", 1)]).max(), Ok("a"));
        assert_eq!(fd(&[("b", 1), ("a", 1)]).max(), Ok("a"));
        assert_eq!(fd(&[("a", 1), ("b", 3), ("c", 3)]).max(), Ok("b"));
        assert_eq!(FreqDist::new().max(), Err(ProbabilityError::EmptyDistribution));
    }

    #[test]
    fn estimators() {
        let d = fd(&[("a", 2), ("b", 1)]);
        let mle = ProbDist::mle(d.clone()).unwrap();
        assert!((mle.prob("a") - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(mle.prob("zzz"), 0.0);

        let laplace = ProbDist::laplace(d, 2).unwrap();
        assert!((laplace.prob("a") - 0.6).abs() < 1e-15);

        let empty = ProbDist::lidstone(FreqDist::new(), 0.5, 4).unwrap();
        assert_eq!(empty.prob("anything"), 0.25);
        assert_eq!(ProbDist::ele(FreqDist::new(), 4).unwrap().prob("x"), 0.25);
    }

    #[test]
    fn estimator_errors() {
        assert_eq!(ProbDist::mle(FreqDist::new()), Err(ProbabilityError::EmptyDistribution));
        assert_eq!(ProbDist::lidstone(FreqDist::new(), 1.0, 0), Err(ProbabilityError::InvalidBins { bins: 0, observed: 0 }));
        assert!(matches!(ProbDist::laplace(fd(&[("a", 1), ("b", 1)]), 1), Err(ProbabilityError::InvalidBins { .. })));
        assert!(matches!(ProbDist::lidstone(FreqDist::new(), 0.0, 3), Err(ProbabilityError::InvalidGamma(_))));
    }

    #[test]
    fn cond_freq_dist() {
        let mut cfd = CondFreqDist::new();
        cfd.increment("the", "DT");
        cfd.increment("the", "DT");
        cfd.increment("run", "VB");
        assert_eq!(cfd.get("the").unwrap().count("DT"), 2);
        assert_eq!(cfd.conditions().collect::<Vec<_>>(), ["run", "the"]);
        assert!(cfd.get("dog").is_none());
    }

    fn counts_strategy() -> impl Strategy<Value = Vec<(String, u64)>> {
        prop::collection::vec(("[a-e]", 1u64..50), 0..8)
    }

    proptest! {
        #[test]
        fn lidstone_sums_to_one(items in counts_strategy(), extra in 0usize..20, gamma in 1e-3f64..5.0) {
            let d: FreqDist = items.iter().flat_map(|(o, c)| std::iter::repeat_n(o.as_str(), *c as usize)).collect();
            let pd = ProbDist::lidstone(d.clone(), gamma, d.distinct() + extra + 1).unwrap();
            prop_assert!((pd.total_mass() - 1.0).abs() < 1e-9);
            for (o, _) in d.iter() {
                let p = pd.prob(o);
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn mle_sums_to_one(items in counts_strategy()) {
            let d: FreqDist = items.iter().flat_map(|(o, c)| std::iter::repeat_n(o.as_str(), *c as usize)).collect();
            prop_assume!(!d.is_empty());
            prop_assert!((ProbDist::mle(d).unwrap().total_mass() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn frequency_times_total_is_count(items in counts_strategy()) {
            let d: FreqDist = items.iter().flat_map(|(o, c)| std::iter::repeat_n(o.as_str(), *c as usize)).collect();
            for o in ["a", "b", "c", "z"] {
                let f = d.freq(o);
                prop_assert_eq!(f.total, d.total());
                prop_assert_eq!(f.count, d.count(o));
            }
        }

        #[test]
        fn lidstone_approaches_mle(items in counts_strategy(), extra in 0usize..5) {
            let d: FreqDist = items.iter().flat_map(|(o, c)| std::iter::repeat_n(o.as_str(), *c as usize)).collect();
            prop_assume!(!d.is_empty());
            let mle = ProbDist::mle(d.clone()).unwrap();
            let lid = ProbDist::lidstone(d.clone(), 1e-8, d.distinct() + extra).unwrap();
            for (o, _) in d.iter() {
                prop_assert!((mle.prob(o) - lid.prob(o)).abs() < 1e-6);
            }
        }
    }
}
