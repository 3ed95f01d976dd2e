//! Summary evaluation: ROUGE-1/2/L, the entailment-based factuality score and
//! corpus statistics on specificity and abstractiveness.
//!
//! Scores are generic over the float type; `f64` aliases live at the crate root.

mod analysis;
mod nli;
mod report;
mod rouge;

use std::fmt::Debug;

use num_traits::Float;
use serde::Serialize;

pub use analysis::{analysis_stats, novel_ngram_ratio, AnalysisStats};
pub use nli::{
    e2e_nli_score, e2e_nli_scores, Aggregation, BackendError, EntailmentBackend, EntailmentLabel, EntailmentVerdict,
    HttpBackend, LexicalBackend, NliPair, NliScores,
};
pub use report::{evaluate, CorpusEval, EvalError, EvalItem, EvalReport, SampleEval};
pub use rouge::{lcs_len, ngram_counts, rouge_l, rouge_n, rouge_tokens, RougeScore};

/// Float type usable for scores.
pub trait Scalar: Float + Serialize + Debug + Send + Sync + 'static {
    fn from_count(n: usize) -> Self {
        Self::from(n).expect("count fits in a float")
    }
}

impl<T: Float + Serialize + Debug + Send + Sync + 'static> Scalar for T {}

/// Arithmetic mean; zero for an empty slice.
pub fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let (sum, n) = values.into_iter().fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_count(n)
    }
}
