use std::collections::{BTreeMap, BTreeSet};

use super::{ChunkError, ChunkRuleSpec, ChunkStructure, Span};

/// Removes every chunk, keeping the tokens.
pub fn unchunk(gold: &ChunkStructure) -> ChunkStructure {
    ChunkStructure::unchunked(gold.tokens().to_vec())
}

/// Exact-span comparison of a test chunking against gold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChunkScore {
    pub correct: usize,
    pub gold_total: usize,
    pub test_total: usize,
    /// Gold chunks the test chunking did not produce.
    pub missed: Vec<Span>,
    /// Test chunks that are not in the gold chunking.
    pub incorrect: Vec<Span>,
}

impl ChunkScore {
    /// 1.0 when the test side has no chunks.
    pub fn precision(&self) -> f64 {
        if self.test_total == 0 {
            1.0
        } else {
            self.correct as f64 / self.test_total as f64
        }
    }

    /// 1.0 when the gold side has no chunks.
    pub fn recall(&self) -> f64 {
        if self.gold_total == 0 {
            1.0
        } else {
            self.correct as f64 / self.gold_total as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Adds counts from another sentence. Span lists are not merged since
    /// they are only meaningful per sentence.
    pub fn add_counts(&mut self, other: &ChunkScore) {
        self.correct += other.correct;
        self.gold_total += other.gold_total;
        self.test_total += other.test_total;
    }
}

pub fn score_chunks(gold: &ChunkStructure, test: &ChunkStructure) -> Result<ChunkScore, ChunkError> {
    let same_tokens = gold.len() == test.len() && gold.tokens().iter().zip(test.tokens()).all(|(g, t)| g.text == t.text && g.tag == t.tag);
    if !same_tokens {
        return Err(ChunkError::TokenMismatch);
    }
    let gold_set: BTreeSet<Span> = gold.chunks().iter().copied().collect();
    let test_set: BTreeSet<Span> = test.chunks().iter().copied().collect();
    Ok(ChunkScore {
        correct: gold_set.intersection(&test_set).count(),
        gold_total: gold_set.len(),
        test_total: test_set.len(),
        missed: gold_set.difference(&test_set).copied().collect(),
        incorrect: test_set.difference(&gold_set).copied().collect(),
    })
}

/// Sentence-by-sentence scores plus the corpus totals.
pub fn score_corpus(gold: &[ChunkStructure], test: &[ChunkStructure]) -> Result<(ChunkScore, Vec<ChunkScore>), ChunkError> {
    if gold.len() != test.len() {
        return Err(ChunkError::TokenMismatch);
    }
    let per_sentence = gold.iter().zip(test).map(|(g, t)| score_chunks(g, t)).collect::<Result<Vec<_>, _>>()?;
    let mut total = ChunkScore::default();
    for s in &per_sentence {
        total.add_counts(s);
    }
    Ok((total, per_sentence))
}

/// For each tag, the fraction of its occurrences that fall inside a gold chunk.
pub fn np_tag_rates(corpus: &[ChunkStructure]) -> Result<BTreeMap<String, f64>, ChunkError> {
    if corpus.is_empty() {
        return Err(ChunkError::EmptyCorpus);
    }
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for cs in corpus {
        let mut inside = vec![false; cs.len()];
        for &(i, j) in cs.chunks() {
            inside[i..j].fill(true);
        }
        for (tag, within) in cs.tags().into_iter().zip(inside) {
            let entry = counts.entry(tag).or_default();
            entry.1 += 1;
            if within {
                entry.0 += 1;
            }
        }
    }
    Ok(counts.into_iter().map(|(tag, (hit, total))| (tag.to_owned(), hit as f64 / total as f64)).collect())
}

/// A single chunk rule over every tag whose rate exceeds `threshold`, or
/// `None` when no tag does.
pub fn rule_from_tag_rates(rates: &BTreeMap<String, f64>, threshold: f64) -> Option<ChunkRuleSpec> {
    let tags: Vec<String> = rates.iter().filter(|(_, &r)| r > threshold).map(|(t, _)| regex::escape(t)).collect();
    if tags.is_empty() {
        return None;
    }
    let pattern = format!("<{}>*", tags.join("|"));
    Some(ChunkRuleSpec::chunk(&pattern).with_note(&format!("tags inside chunks more than {threshold} of the time")))
}

#[cfg(test)]
mod tests {
    use super::super::{read_chunked, read_chunked_corpus};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn partial_overlap_scores() {
        let gold = read_chunked("[ a/DT b/NN ] c/VB [ d/DT e/NN ]").unwrap();
        let test = read_chunked("[ a/DT b/NN ] c/VB d/DT [ e/NN ]").unwrap();
        let s = score_chunks(&gold, &test).unwrap();
        assert_eq!((s.precision(), s.recall(), s.f1()), (0.5, 0.5, 0.5));
        assert_eq!(s.missed, [(3, 5)]);
        assert_eq!(s.incorrect, [(4, 5)]);
    }

    #[test]
    fn identity_and_boundaries() {
        let gold = read_chunked("[ a/DT b/NN ] c/VB [ d/DT e/NN ]").unwrap();
        let s = score_chunks(&gold, &gold).unwrap();
        assert_eq!((s.precision(), s.recall(), s.f1()), (1.0, 1.0, 1.0));

        let s = score_chunks(&gold, &unchunk(&gold)).unwrap();
        assert_eq!((s.precision(), s.recall(), s.f1()), (1.0, 0.0, 0.0));

        let other = read_chunked("a/DT b/NN").unwrap();
        assert_eq!(score_chunks(&gold, &other), Err(ChunkError::TokenMismatch));
    }

    #[test]
    fn unchunk_is_idempotent() {
        let gold = read_chunked("[ a/DT b/NN ] c/VB [ d/DT e/NN ]").unwrap();
        let u = unchunk(&gold);
        assert!(u.chunks().is_empty());
        assert_eq!(u.tokens(), gold.tokens());
        assert_eq!(unchunk(&u), u);
        assert!(unchunk(&read_chunked("").unwrap()).is_empty());
    }

    #[test]
    fn tag_rates() {
        let corpus = read_chunked_corpus("[ the/DT dog/NN ] saw/VBD [ the/DT cat/NN ]\n[ the/DT man/NN ] ran/VBD\nthe/DT end/NN\n").unwrap();
        let rates = np_tag_rates(&corpus).unwrap();
        assert_eq!(rates["DT"], 0.75);
        assert_eq!(rates["VBD"], 0.0);
        assert_eq!(np_tag_rates(&[]), Err(ChunkError::EmptyCorpus));

        let rule = rule_from_tag_rates(&rates, 0.5).unwrap();
        assert_eq!(rule.patterns, ["<DT|NN>*"]);
        assert!(rule_from_tag_rates(&rates, 0.9).is_none());
        let escaped = rule_from_tag_rates(&[("PRP$".to_string(), 0.9), ("$".to_string(), 0.6)].into(), 0.5).unwrap();
        assert_eq!(escaped.patterns, [r"<\$|PRP\$>*"]);
        let rule = escaped.compile().unwrap();
        let cs = read_chunked("his/PRP$ $/$ 5/CD").unwrap();
        assert_eq!(rule.apply(&cs).chunks(), [(0, 2)]);
    }

    proptest! {
        #[test]
        fn swapping_exchanges_precision_and_recall(
            a in super::super::tests::structure_strategy(),
            seed in prop::collection::vec(any::<bool>(), 12),
        ) {
            // Derive a second chunking of the same tokens from the seed bits.
            let mut spans = Vec::new();
            let mut k = 0;
            while k < a.len() {
                if seed[k] { spans.push((k, (k + 2).min(a.len()))); k += 2; } else { k += 1; }
            }
            let b = ChunkStructure::new(a.tokens().to_vec(), spans);
            let ab = score_chunks(&a, &b).unwrap();
            let ba = score_chunks(&b, &a).unwrap();
            prop_assert_eq!(ab.precision(), ba.recall());
            prop_assert_eq!(ab.recall(), ba.precision());
            prop_assert_eq!(ab.f1(), ba.f1());
        }
    }
}
