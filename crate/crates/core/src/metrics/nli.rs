use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rouge::rouge_tokens;
use super::{mean, Scalar};
use crate::annotate::is_stopword;
use crate::preprocess::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntailmentLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl FromStr for EntailmentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entailment" => Ok(EntailmentLabel::Entailment),
            "neutral" => Ok(EntailmentLabel::Neutral),
            "contradiction" => Ok(EntailmentLabel::Contradiction),
            _ => Err(format!("unknown entailment label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentVerdict {
    pub label: EntailmentLabel,
    pub confidence: Option<f64>,
}

impl EntailmentVerdict {
    pub fn new(label: EntailmentLabel) -> Self {
        EntailmentVerdict {
            label,
            confidence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliPair {
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request to {url} failed after {attempts} attempts: {message}")]
    Unreachable {
        url: String,
        attempts: usize,
        message: String,
    },
    #[error("{url} answered HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("malformed response from {url}: {message}")]
    Malformed { url: String, message: String },
}

/// Anything that labels (premise, hypothesis) pairs.
pub trait EntailmentBackend: Sync {
    fn entail(&self, pairs: &[NliPair]) -> Result<Vec<EntailmentVerdict>, BackendError>;

    fn describe(&self) -> String;
}

/// How sentence verdicts become one summary score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// 1 iff every sentence is entailed.
    #[default]
    Strict,
    /// Fraction of entailed sentences.
    Mean,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Strict => "strict",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Aggregation::Strict),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(format!("unknown aggregation {s:?} (expected strict or mean)")),
        }
    }
}

impl Aggregation {
    fn combine<T: Scalar>(self, verdicts: &[EntailmentVerdict]) -> T {
        let entailed = verdicts.iter().filter(|v| v.label == EntailmentLabel::Entailment);
        match self {
            Aggregation::Strict => {
                if !verdicts.is_empty() && entailed.count() == verdicts.len() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Aggregation::Mean => mean(verdicts.iter().map(|v| {
                if v.label == EntailmentLabel::Entailment {
                    T::one()
                } else {
                    T::zero()
                }
            })),
        }
    }
}

/// Per-summary factuality scores plus the indices of empty summaries, which
/// score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NliScores<T> {
    pub scores: Vec<T>,
    pub empty_summaries: Vec<usize>,
}

/// Scores many (document, summary) pairs, sending all summary sentences to
/// the backend in one call.
pub fn e2e_nli_scores<T: Scalar>(
    items: &[(&str, &str)],
    backend: &dyn EntailmentBackend,
    aggregation: Aggregation,
) -> Result<NliScores<T>, BackendError> {
    let mut pairs = Vec::new();
    let mut ranges = Vec::with_capacity(items.len());
    for (document, summary) in items {
        let from = pairs.len();
        pairs.extend(split_sentences(summary).into_iter().map(|s| NliPair {
            premise: document.to_string(),
            hypothesis: s.text,
        }));
        ranges.push(from..pairs.len());
    }
    let verdicts = if pairs.is_empty() {
        Vec::new()
    } else {
        backend.entail(&pairs)?
    };
    if verdicts.len() != pairs.len() {
        return Err(BackendError::Malformed {
            url: backend.describe(),
            message: format!("{} verdicts for {} pairs", verdicts.len(), pairs.len()),
        });
    }
    let mut empty_summaries = Vec::new();
    let scores = ranges
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.is_empty() {
                empty_summaries.push(i);
            }
            aggregation.combine(&verdicts[r])
        })
        .collect();
    Ok(NliScores {
        scores,
        empty_summaries,
    })
}

/// Factuality score of one summary against its document.
pub fn e2e_nli_score<T: Scalar>(
    document: &str,
    summary: &str,
    backend: &dyn EntailmentBackend,
    aggregation: Aggregation,
) -> Result<T, BackendError> {
    Ok(e2e_nli_scores(&[(document, summary)], backend, aggregation)?.scores[0])
}

fn content_tokens(text: &str) -> Vec<String> {
    rouge_tokens(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

/// Deterministic stand-in for an NLI model: ENTAILMENT iff at least
/// `threshold` of the hypothesis content tokens (lowercased, stopwords
/// removed) occur in the premise, NEUTRAL otherwise. A hypothesis without
/// content tokens is vacuously entailed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexicalBackend {
    pub threshold: f64,
}

impl Default for LexicalBackend {
    fn default() -> Self {
        LexicalBackend { threshold: 0.9 }
    }
}

impl LexicalBackend {
    pub fn verdict(&self, premise: &str, hypothesis: &str) -> EntailmentVerdict {
        let hyp = content_tokens(hypothesis);
        if hyp.is_empty() {
            return EntailmentVerdict {
                label: EntailmentLabel::Entailment,
                confidence: Some(1.0),
            };
        }
        let premise: HashSet<String> = content_tokens(premise).into_iter().collect();
        let covered = hyp.iter().filter(|t| premise.contains(*t)).count() as f64 / hyp.len() as f64;
        let label = if covered >= self.threshold {
            EntailmentLabel::Entailment
        } else {
            EntailmentLabel::Neutral
        };
        EntailmentVerdict {
            label,
            confidence: Some(covered),
        }
    }
}

impl EntailmentBackend for LexicalBackend {
    fn entail(&self, pairs: &[NliPair]) -> Result<Vec<EntailmentVerdict>, BackendError> {
        Ok(pairs.iter().map(|p| self.verdict(&p.premise, &p.hypothesis)).collect())
    }

    fn describe(&self) -> String {
        format!("lexical(threshold={})", self.threshold)
    }
}

#[derive(Serialize)]
struct EntailRequest<'a> {
    pairs: &'a [NliPair],
}

#[derive(Deserialize)]
struct EntailResponse {
    labels: Vec<String>,
    #[serde(default)]
    probs: Option<Vec<Vec<f64>>>,
}

/// Client for a remote NLI service: `POST {endpoint}/entail` with
/// `{"pairs":[{"premise","hypothesis"}]}`, answered by
/// `{"labels":[...],"probs":[[e,n,c],...]}`.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    url: String,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub attempts: usize,
    pub base_delay: Duration,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(endpoint: &str) -> Self {
        HttpBackend {
            url: format!("{}/entail", endpoint.trim_end_matches('/')),
            batch_size: 32,
            max_in_flight: 4,
            attempts: 3,
            base_delay: Duration::from_millis(200),
            agent: ureq::AgentBuilder::new()
                .timeout_connect(Duration::from_secs(5))
                .timeout(Duration::from_secs(120))
                .build(),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn post_once(&self, batch: &[NliPair]) -> Result<EntailResponse, Attempt> {
        let resp = self.agent.post(&self.url).send_json(EntailRequest { pairs: batch });
        match resp {
            Ok(resp) => resp.into_json::<EntailResponse>().map_err(|e| {
                Attempt::Fatal(BackendError::Malformed {
                    url: self.url.clone(),
                    message: e.to_string(),
                })
            }),
            Err(ureq::Error::Status(status, _)) if status >= 500 || status == 429 => {
                Attempt::retry(format!("HTTP {status}"))
            }
            Err(ureq::Error::Status(status, _)) => Err(Attempt::Fatal(BackendError::Status {
                url: self.url.clone(),
                status,
            })),
            Err(ureq::Error::Transport(t)) => Attempt::retry(t.to_string()),
        }
    }

    /// Sends one batch, retrying transient failures with exponential backoff.
    pub fn entail_batch(&self, batch: &[NliPair]) -> Result<Vec<EntailmentVerdict>, BackendError> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let mut delay = self.base_delay;
        let mut last = String::new();
        for attempt in 1..=self.attempts.max(1) {
            match self.post_once(batch) {
                Ok(resp) => return self.decode(resp, batch.len()),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => last = message,
            }
            if attempt < self.attempts {
                thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(BackendError::Unreachable {
            url: self.url.clone(),
            attempts: self.attempts.max(1),
            message: last,
        })
    }

    fn decode(&self, resp: EntailResponse, expected: usize) -> Result<Vec<EntailmentVerdict>, BackendError> {
        let malformed = |message: String| BackendError::Malformed {
            url: self.url.clone(),
            message,
        };
        if resp.labels.len() != expected {
            return Err(malformed(format!("{} labels for {expected} pairs", resp.labels.len())));
        }
        if let Some(probs) = &resp.probs {
            if probs.len() != expected {
                return Err(malformed(format!("{} prob vectors for {expected} pairs", probs.len())));
            }
        }
        resp.labels
            .iter()
            .enumerate()
            .map(|(i, raw)| {
                let label: EntailmentLabel = raw.parse().map_err(malformed)?;
                let confidence = resp.probs.as_ref().and_then(|p| {
                    let idx = match label {
                        EntailmentLabel::Entailment => 0,
                        EntailmentLabel::Neutral => 1,
                        EntailmentLabel::Contradiction => 2,
                    };
                    p[i].get(idx).copied()
                });
                Ok(EntailmentVerdict { label, confidence })
            })
            .collect()
    }
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl Attempt {
    fn retry<T>(message: String) -> Result<T, Attempt> {
        Err(Attempt::Retry(message))
    }
}

impl EntailmentBackend for HttpBackend {
    /// Splits into batches and keeps at most `max_in_flight` requests open;
    /// verdicts come back in input order.
    fn entail(&self, pairs: &[NliPair]) -> Result<Vec<EntailmentVerdict>, BackendError> {
        let batches: Vec<&[NliPair]> = pairs.chunks(self.batch_size.max(1)).collect();
        let mut out = Vec::with_capacity(pairs.len());
        for wave in batches.chunks(self.max_in_flight.max(1)) {
            let results: Vec<_> = thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| scope.spawn(move || self.entail_batch(batch)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("request thread panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("http:{}", self.url)
    }
}
