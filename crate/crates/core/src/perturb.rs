//! Counterfactual summary perturbations and the mixed training-set emitter.
//!
//! Every sample yields its original pair; a sample the chosen strategy can
//! transform additionally yields one transformed pair whose input carries the
//! strategy's control code. Randomness is drawn from a per-sample seed derived
//! from the run seed and the sample id, so results do not depend on corpus
//! order or worker count.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::annotate::select_nouns;
use crate::corpus::{pair_id, AugmentedPair, Provenance, Sample, Transform};
use crate::wordnet::SynsetGraph;

pub const DEFAULT_SEED: u64 = 20_221;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    Er,
    CatEr,
    WnHyper,
}

impl Strategy {
    pub fn transform(self) -> Transform {
        match self {
            Strategy::Er => Transform::Er,
            Strategy::CatEr => Transform::CatEr,
            Strategy::WnHyper => Transform::WnHyper,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.transform().fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlCodes {
    pub original: String,
    pub wrong: String,
    pub general: String,
}

impl Default for ControlCodes {
    fn default() -> Self {
        ControlCodes {
            original: "generate a summary".to_string(),
            wrong: "generate a wrong summary".to_string(),
            general: "generate a general summary".to_string(),
        }
    }
}

impl ControlCodes {
    /// `"<code>: <document>"`.
    pub fn prefix(code: &str, document: &str) -> String {
        format!("{code}: {document}")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("noun_fraction must lie in [0, 1], got {0}")]
    NounFraction(f64),
    #[error("entities_per_summary must be at least 1")]
    EntitiesPerSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub strategy: Strategy,
    pub seed: u64,
    pub noun_fraction: f64,
    pub entities_per_summary: usize,
    pub control_codes: ControlCodes,
}

impl AugmentConfig {
    pub fn new(strategy: Strategy) -> Self {
        AugmentConfig {
            strategy,
            seed: DEFAULT_SEED,
            noun_fraction: 0.3,
            entities_per_summary: 1,
            control_codes: ControlCodes::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.noun_fraction) {
            return Err(ConfigError::NounFraction(self.noun_fraction));
        }
        if self.entities_per_summary == 0 {
            return Err(ConfigError::EntitiesPerSummary);
        }
        Ok(())
    }
}

/// Entity inventory of a corpus, deduplicated by `(text, category)` in
/// first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityIndex {
    pub by_category: BTreeMap<String, Vec<String>>,
    pub all: Vec<IndexedEntity>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexedEntity {
    pub text: String,
    pub category: String,
}

impl EntityIndex {
    /// Indexes document then summary mentions of every sample.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a Sample>, source: impl Into<String>) -> Self {
        let mut seen = HashSet::new();
        let mut idx = EntityIndex {
            source: source.into(),
            ..EntityIndex::default()
        };
        for s in corpus {
            for m in s.document_entities.iter().chain(&s.summary_entities) {
                if seen.insert((m.text.clone(), m.category.clone())) {
                    idx.by_category
                        .entry(m.category.clone())
                        .or_default()
                        .push(m.text.clone());
                    idx.all.push(IndexedEntity {
                        text: m.text.clone(),
                        category: m.category.clone(),
                    });
                }
            }
        }
        idx
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }
}

/// Why a sample produced no transformed pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoEntities,
    NoEligibleReplacement,
    NoNouns,
    ZeroSelected,
    NoHypernym,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoEntities => "no_entities",
            SkipReason::NoEligibleReplacement => "no_eligible_replacement",
            SkipReason::NoNouns => "no_nouns",
            SkipReason::ZeroSelected => "zero_selected",
            SkipReason::NoHypernym => "no_hypernym",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-sample seed: xxh3 of the sample id keyed by the run seed.
pub fn sample_seed(run_seed: u64, sample_id: &str) -> u64 {
    xxh3_64_with_seed(sample_id.as_bytes(), run_seed)
}

fn contains_ci(haystack_lower: &str, needle: &str) -> bool {
    haystack_lower.contains(&needle.to_lowercase())
}

/// Replaces every occurrence of each `(orig, repl)` in one left-to-right
/// pass (earliest, then longest match first). Returns the new text and
/// provenance with character offsets into it.
fn splice_all(text: &str, swaps: &[(String, String)]) -> (String, Vec<Provenance>) {
    let mut out = String::with_capacity(text.len());
    let mut prov = Vec::new();
    let mut out_chars = 0;
    let mut rest = text;
    loop {
        let hit = swaps
            .iter()
            .filter_map(|(o, r)| rest.find(o.as_str()).map(|at| (at, std::cmp::Reverse(o.len()), o, r)))
            .min();
        let Some((at, _, orig, repl)) = hit else {
            out.push_str(rest);
            break;
        };
        let before = &rest[..at];
        out.push_str(before);
        out_chars += before.chars().count();
        prov.push(Provenance {
            orig: orig.clone(),
            repl: repl.clone(),
            start: out_chars,
        });
        out.push_str(repl);
        out_chars += repl.chars().count();
        rest = &rest[at + orig.len()..];
    }
    (out, prov)
}

/// Candidate replacements for one mention.
#[derive(Clone, Copy)]
enum Pool<'a> {
    All(&'a [IndexedEntity]),
    Category(&'a [String]),
}

impl<'a> Pool<'a> {
    fn len(self) -> usize {
        match self {
            Pool::All(v) => v.len(),
            Pool::Category(v) => v.len(),
        }
    }

    fn get(self, i: usize) -> &'a str {
        match self {
            Pool::All(v) => &v[i].text,
            Pool::Category(v) => &v[i],
        }
    }
}

const REJECTION_TRIES: usize = 32;

/// Uniform draw among pool entries accepted by `eligible`. Tries rejection
/// sampling first and falls back to enumerating the eligible entries; both
/// phases are uniform over the eligible set.
fn draw_eligible<'a>(pool: Pool<'a>, rng: &mut ChaCha8Rng, eligible: impl Fn(&str) -> bool) -> Option<&'a str> {
    let n = pool.len();
    if n == 0 {
        return None;
    }
    for _ in 0..REJECTION_TRIES {
        let cand = pool.get(rng.gen_range(0..n));
        if eligible(cand) {
            return Some(cand);
        }
    }
    let all: Vec<&str> = (0..n).map(|i| pool.get(i)).filter(|t| eligible(t)).collect();
    (!all.is_empty()).then(|| all[rng.gen_range(0..all.len())])
}

fn entity_swap<'a>(
    s: &Sample,
    cfg: &AugmentConfig,
    rng: &mut ChaCha8Rng,
    transform: Transform,
    pool_for: impl Fn(&str) -> Pool<'a>,
) -> Result<AugmentedPair, SkipReason> {
    // distinct surface strings in order of first mention
    let mut seen = HashSet::new();
    let mentions: Vec<_> = s
        .summary_entities
        .iter()
        .filter(|m| seen.insert(m.text.as_str()))
        .collect();
    if mentions.is_empty() {
        return Err(SkipReason::NoEntities);
    }
    let k = cfg.entities_per_summary.min(mentions.len());
    let mut chosen = sample_indices(rng, mentions.len(), k).into_vec();
    chosen.sort_unstable();

    let document = s.document.to_lowercase();
    let mut swaps = Vec::new();
    for i in chosen {
        let m = mentions[i];
        let repl = draw_eligible(pool_for(&m.category), rng, |t| {
            t != m.text && !contains_ci(&document, t)
        });
        if let Some(repl) = repl {
            swaps.push((m.text.clone(), repl.to_string()));
        }
    }
    if swaps.is_empty() {
        return Err(SkipReason::NoEligibleReplacement);
    }
    let (target, provenance) = splice_all(&s.summary, &swaps);
    Ok(AugmentedPair {
        id: pair_id(&s.id, transform),
        input: ControlCodes::prefix(&cfg.control_codes.wrong, &s.document),
        target,
        transform,
        provenance,
    })
}

/// Swaps summary entities for random corpus entities absent from the document.
pub fn entity_replace(
    s: &Sample,
    idx: &EntityIndex,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<AugmentedPair, SkipReason> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entity_swap(s, cfg, &mut rng, Transform::Er, |_| Pool::All(&idx.all))
}

/// Like [`entity_replace`], drawing only from the mention's own category.
pub fn categorical_entity_replace(
    s: &Sample,
    idx: &EntityIndex,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<AugmentedPair, SkipReason> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entity_swap(s, cfg, &mut rng, Transform::CatEr, |category| {
        Pool::Category(idx.by_category.get(category).map_or(&[], Vec::as_slice))
    })
}

/// `ceil(fraction * n)`, ignoring float noise just above an integer.
pub fn nouns_to_replace(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let k = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (k.max(0.0) as usize).min(n)
}

/// Replaces a fraction of the summary's nouns with their first-sense hypernym.
pub fn hypernym_replace(
    s: &Sample,
    g: &SynsetGraph,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<AugmentedPair, SkipReason> {
    let nouns = select_nouns(s, g);
    if nouns.is_empty() {
        return Err(SkipReason::NoNouns);
    }
    let k = nouns_to_replace(cfg.noun_fraction, nouns.len());
    if k == 0 {
        return Err(SkipReason::ZeroSelected);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample_indices(&mut rng, nouns.len(), k).into_vec();
    chosen.sort_unstable_by_key(|&i| nouns[i].start);

    let chars: Vec<char> = s.summary.chars().collect();
    let mut target = String::with_capacity(s.summary.len());
    let mut provenance = Vec::new();
    let mut cursor = 0;
    let mut out_chars = 0;
    for i in chosen {
        let noun = &nouns[i];
        if noun.start < cursor {
            continue;
        }
        let Some(hyper) = g.hypernym_of(&noun.text.to_lowercase()) else {
            continue;
        };
        target.extend(&chars[cursor..noun.start]);
        out_chars += noun.start - cursor;
        provenance.push(Provenance {
            orig: noun.text.clone(),
            repl: hyper.to_string(),
            start: out_chars,
        });
        target.push_str(hyper);
        out_chars += hyper.chars().count();
        cursor = noun.end;
    }
    if provenance.is_empty() {
        return Err(SkipReason::NoHypernym);
    }
    target.extend(&chars[cursor..]);
    Ok(AugmentedPair {
        id: pair_id(&s.id, Transform::WnHyper),
        input: ControlCodes::prefix(&cfg.control_codes.general, &s.document),
        target,
        transform: Transform::WnHyper,
        provenance,
    })
}

pub fn original_pair(s: &Sample, codes: &ControlCodes) -> AugmentedPair {
    AugmentedPair {
        id: pair_id(&s.id, Transform::Original),
        input: ControlCodes::prefix(&codes.original, &s.document),
        target: s.summary.clone(),
        transform: Transform::Original,
        provenance: Vec::new(),
    }
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("strategy {0} needs an entity index")]
    MissingIndex(Strategy),
    #[error("strategy {0} needs a WordNet graph")]
    MissingGraph(Strategy),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Counts of what an augmentation run emitted and skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub noun_fraction: f64,
    pub entities_per_summary: usize,
    pub samples: usize,
    pub originals: usize,
    pub transformed: usize,
    pub skipped: usize,
    pub skips: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct AugmentOutput {
    pub pairs: Vec<AugmentedPair>,
    pub report: SkipReport,
}

/// Holds what one strategy needs and transforms single samples.
pub struct Augmenter<'a> {
    cfg: &'a AugmentConfig,
    index: Option<&'a EntityIndex>,
    graph: Option<&'a SynsetGraph>,
}

impl<'a> Augmenter<'a> {
    pub fn new(
        cfg: &'a AugmentConfig,
        index: Option<&'a EntityIndex>,
        graph: Option<&'a SynsetGraph>,
    ) -> Result<Self, AugmentError> {
        cfg.validate()?;
        match cfg.strategy {
            Strategy::Er | Strategy::CatEr if index.is_none() => return Err(AugmentError::MissingIndex(cfg.strategy)),
            Strategy::WnHyper if graph.is_none() => return Err(AugmentError::MissingGraph(cfg.strategy)),
            _ => {}
        }
        Ok(Augmenter { cfg, index, graph })
    }

    pub fn transform(&self, s: &Sample) -> Result<AugmentedPair, SkipReason> {
        let seed = sample_seed(self.cfg.seed, &s.id);
        match self.cfg.strategy {
            Strategy::Er => entity_replace(s, self.index.expect("checked in new"), self.cfg, seed),
            Strategy::CatEr => categorical_entity_replace(s, self.index.expect("checked in new"), self.cfg, seed),
            Strategy::WnHyper => hypernym_replace(s, self.graph.expect("checked in new"), self.cfg, seed),
        }
    }

    /// Original pair followed by the transformed pair, if any.
    pub fn augment_sample(&self, s: &Sample) -> (AugmentedPair, Result<AugmentedPair, SkipReason>) {
        (original_pair(s, &self.cfg.control_codes), self.transform(s))
    }

    /// Processes `corpus` on `workers` threads; output keeps input order.
    pub fn augment_corpus(&self, corpus: &[Sample], workers: usize) -> Result<AugmentOutput, AugmentError> {
        let run = || corpus.par_iter().map(|s| self.augment_sample(s)).collect::<Vec<_>>();
        let results = if workers <= 1 {
            corpus.iter().map(|s| self.augment_sample(s)).collect()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| AugmentError::Pool(e.to_string()))?
                .install(run)
        };

        let mut pairs = Vec::with_capacity(corpus.len() * 2);
        let mut skips: HashMap<SkipReason, usize> = HashMap::new();
        for (original, transformed) in results {
            pairs.push(original);
            match transformed {
                Ok(p) => pairs.push(p),
                Err(reason) => *skips.entry(reason).or_default() += 1,
            }
        }
        let skipped: usize = skips.values().sum();
        let report = SkipReport {
            strategy: self.cfg.strategy,
            seed: self.cfg.seed,
            noun_fraction: self.cfg.noun_fraction,
            entities_per_summary: self.cfg.entities_per_summary,
            samples: corpus.len(),
            originals: corpus.len(),
            transformed: corpus.len() - skipped,
            skipped,
            skips: skips.into_iter().map(|(k, v)| (k.as_str().to_string(), v)).collect(),
        };
        Ok(AugmentOutput { pairs, report })
    }
}

/// Convenience wrapper over [`Augmenter::augment_corpus`].
pub fn augment_corpus(
    corpus: &[Sample],
    cfg: &AugmentConfig,
    index: Option<&EntityIndex>,
    graph: Option<&SynsetGraph>,
    workers: usize,
) -> Result<AugmentOutput, AugmentError> {
    Augmenter::new(cfg, index, graph)?.augment_corpus(corpus, workers)
}
