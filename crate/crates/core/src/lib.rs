//! Counterfactual data augmentation for abstractive summarization and the
//! matching factuality evaluation.
//!
//! The pipeline reads JSONL samples ([`corpus`]), optionally cleans them
//! ([`preprocess`]), perturbs reference summaries by swapping entities or
//! replacing nouns with WordNet hypernyms ([`perturb`], [`wordnet`],
//! [`annotate`]), and scores system summaries ([`metrics`]).

pub mod annotate;
pub mod corpus;
pub mod metrics;
pub mod perturb;
pub mod preprocess;
pub mod wordnet;

pub use corpus::{AugmentedPair, EntityMention, Sample, Transform};
pub use perturb::{AugmentConfig, EntityIndex, Strategy};
pub use wordnet::SynsetGraph;

pub type RougeScore64 = metrics::RougeScore<f64>;
pub type RougeScore32 = metrics::RougeScore<f32>;
pub type EvalReport64 = metrics::EvalReport<f64>;
pub type EvalReport32 = metrics::EvalReport<f32>;
pub type AnalysisStats64 = metrics::AnalysisStats<f64>;
