use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Scalar;

/// Precision, recall and their harmonic mean, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> RougeScore<T> {
    pub fn zero() -> Self {
        RougeScore {
            precision: T::zero(),
            recall: T::zero(),
            f1: T::zero(),
        }
    }

    /// Score from an overlap count and the candidate/reference totals.
    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        if overlap == 0 || candidate_total == 0 || reference_total == 0 {
            return Self::zero();
        }
        let precision = T::from_count(overlap) / T::from_count(candidate_total);
        let recall = T::from_count(overlap) / T::from_count(reference_total);
        let two = T::one() + T::one();
        RougeScore {
            precision,
            recall,
            f1: two * precision * recall / (precision + recall),
        }
    }
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N with reference-clipped n-gram overlap.
pub fn rouge_n<T: Scalar>(candidate: &str, reference: &str, n: usize) -> RougeScore<T> {
    assert!(n >= 1, "ROUGE-N needs n >= 1");
    let cand = rouge_tokens(candidate);
    let refs = rouge_tokens(reference);
    let cand_counts = ngram_counts(&cand, n);
    let ref_counts = ngram_counts(&refs, n);
    let overlap = cand_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let total = |len: usize| (len + 1).saturating_sub(n);
    RougeScore::from_counts(overlap, total(cand.len()), total(refs.len()))
}

/// Longest common subsequence length (two-row dynamic program).
pub fn lcs_len<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<T: Scalar>(candidate: &str, reference: &str) -> RougeScore<T> {
    let cand = rouge_tokens(candidate);
    let refs = rouge_tokens(reference);
    RougeScore::from_counts(lcs_len(&cand, &refs), cand.len(), refs.len())
}
