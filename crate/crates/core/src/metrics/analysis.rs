use serde::{Deserialize, Serialize};

use super::rouge::{ngram_counts, rouge_tokens};
use super::{mean, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisStats<T> {
    /// Mean number of entity mentions per candidate summary.
    pub entity_count_mean: T,
    /// Mean per-sample fraction of candidate bigrams absent from the document.
    pub novel_ngram_ratio: T,
}

/// Fraction of the candidate's n-grams (with multiplicity) that never occur
/// in the document. A candidate with no n-grams has ratio 0.
pub fn novel_ngram_ratio<T: Scalar>(document: &str, candidate: &str, n: usize) -> T {
    let cand = rouge_tokens(candidate);
    let doc = rouge_tokens(document);
    let doc_grams = ngram_counts(&doc, n);
    let cand_grams = ngram_counts(&cand, n);
    let total: usize = cand_grams.values().sum();
    if total == 0 {
        return T::zero();
    }
    let novel: usize = cand_grams
        .iter()
        .filter(|(g, _)| !doc_grams.contains_key(*g))
        .map(|(_, c)| c)
        .sum();
    T::from_count(novel) / T::from_count(total)
}

/// Specificity and abstractiveness statistics over (document, candidate)
/// pairs. `entity_counts[i]` is the number of entity mentions in candidate `i`.
pub fn analysis_stats<T: Scalar>(samples: &[(&str, &str)], entity_counts: &[usize]) -> AnalysisStats<T> {
    AnalysisStats {
        entity_count_mean: mean(entity_counts.iter().map(|&c| T::from_count(c))),
        novel_ngram_ratio: mean(samples.iter().map(|(d, c)| novel_ngram_ratio::<T>(d, c, 2))),
    }
}
