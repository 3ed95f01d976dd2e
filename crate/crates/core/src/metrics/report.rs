use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::analysis::novel_ngram_ratio;
use super::nli::{e2e_nli_scores, Aggregation, BackendError, EntailmentBackend};
use super::rouge::{rouge_l, rouge_n, RougeScore};
use super::{mean, Scalar};

/// One prediction to score against its reference and source document.
#[derive(Debug, Clone)]
pub struct EvalItem<'a> {
    pub id: &'a str,
    pub document: &'a str,
    pub reference: &'a str,
    pub prediction: &'a str,
    /// Entity mentions found in the prediction.
    pub entity_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval<T> {
    pub id: String,
    pub rouge1: RougeScore<T>,
    pub rouge2: RougeScore<T>,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore<T>,
    pub nli_score: T,
    pub entity_count: usize,
    pub novel_bigram_ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEval<T> {
    pub samples: usize,
    pub rouge1: RougeScore<T>,
    pub rouge2: RougeScore<T>,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore<T>,
    pub e2e_nli: T,
    /// `e2e_nli` × 100, the percentage form used in result tables.
    pub e2e_nli_percent: T,
    pub entity_count_mean: T,
    pub novel_ngram_ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub aggregation: Aggregation,
    pub backend: String,
    pub per_sample: Vec<SampleEval<T>>,
    pub corpus: CorpusEval<T>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("entailment backend failed while scoring {samples} samples: {source}")]
    Backend {
        samples: usize,
        #[source]
        source: BackendError,
    },
}

fn mean_rouge<T: Scalar>(scores: impl Iterator<Item = RougeScore<T>> + Clone) -> RougeScore<T> {
    RougeScore {
        precision: mean(scores.clone().map(|s| s.precision)),
        recall: mean(scores.clone().map(|s| s.recall)),
        f1: mean(scores.map(|s| s.f1)),
    }
}

/// Scores every item with ROUGE, the entailment metric and the analysis
/// statistics. Corpus values are arithmetic means of the per-sample values.
pub fn evaluate<T: Scalar>(
    items: &[EvalItem<'_>],
    backend: &dyn EntailmentBackend,
    aggregation: Aggregation,
) -> Result<EvalReport<T>, EvalError> {
    let pairs: Vec<(&str, &str)> = items.iter().map(|i| (i.document, i.prediction)).collect();
    let nli = e2e_nli_scores::<T>(&pairs, backend, aggregation).map_err(|source| EvalError::Backend {
        samples: items.len(),
        source,
    })?;
    let warnings = nli
        .empty_summaries
        .iter()
        .map(|&i| format!("{}: empty prediction scored 0", items[i].id))
        .collect();

    let per_sample: Vec<SampleEval<T>> = items
        .iter()
        .zip(&nli.scores)
        .map(|(item, &nli_score)| SampleEval {
            id: item.id.to_string(),
            rouge1: rouge_n(item.prediction, item.reference, 1),
            rouge2: rouge_n(item.prediction, item.reference, 2),
            rouge_l: rouge_l(item.prediction, item.reference),
            nli_score,
            entity_count: item.entity_count,
            novel_bigram_ratio: novel_ngram_ratio(item.document, item.prediction, 2),
        })
        .collect();

    let e2e_nli = mean(per_sample.iter().map(|s| s.nli_score));
    let corpus = CorpusEval {
        samples: per_sample.len(),
        rouge1: mean_rouge(per_sample.iter().map(|s| s.rouge1)),
        rouge2: mean_rouge(per_sample.iter().map(|s| s.rouge2)),
        rouge_l: mean_rouge(per_sample.iter().map(|s| s.rouge_l)),
        e2e_nli,
        e2e_nli_percent: e2e_nli * T::from_count(100),
        entity_count_mean: mean(per_sample.iter().map(|s| T::from_count(s.entity_count))),
        novel_ngram_ratio: mean(per_sample.iter().map(|s| s.novel_bigram_ratio)),
    };
    Ok(EvalReport {
        aggregation,
        backend: backend.describe(),
        per_sample,
        corpus,
        warnings,
    })
}
