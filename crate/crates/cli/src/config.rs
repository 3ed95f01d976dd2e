//! Command options: flags and `FACTAUG_*` environment variables override the
//! matching section of the TOML config file, which overrides built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Sections of the config file, one per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub preprocess: PreprocessOpts,
    #[serde(default)]
    pub index: IndexOpts,
    #[serde(default)]
    pub augment: AugmentOpts,
    #[serde(default)]
    pub evaluate: EvaluateOpts,
    #[serde(default)]
    pub stats: StatsOpts,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Annotation fallback settings shared by several commands.
#[derive(Debug, Default, Clone)]
pub struct TaggerOpts {
    pub heuristic_entities: Option<bool>,
    pub gazetteers: Vec<String>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessOpts {
    /// Input corpus (JSONL)
    #[arg(long, env = "FACTAUG_INPUT")]
    pub input: Option<PathBuf>,
    /// Cleaned corpus output (JSONL)
    #[arg(long, env = "FACTAUG_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Drop report output (JSON); defaults to <output>.report.json
    #[arg(long, env = "FACTAUG_REPORT")]
    pub report: Option<PathBuf>,
    /// Boilerplate pattern; literal substring, or regex with a `re:` prefix (repeatable)
    #[arg(long = "pattern", value_name = "PATTERN")]
    #[serde(default)]
    pub patterns: Vec<String>,
    /// Remove boilerplate document sentences
    #[arg(long, value_name = "on|off", value_parser = parse_switch, env = "FACTAUG_BOILERPLATE")]
    pub boilerplate: Option<bool>,
    /// Remove summary sentences with entities absent from the document
    #[arg(long, value_name = "on|off", value_parser = parse_switch, env = "FACTAUG_ENTITY_FILTER")]
    pub entity_filter: Option<bool>,
    /// Match patterns and entities case-sensitively
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_CASE_SENSITIVE")]
    pub case_sensitive: Option<bool>,
    /// Abort on the first invalid input line instead of skipping it
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_STRICT")]
    pub strict: Option<bool>,
    /// Worker threads
    #[arg(long, env = "FACTAUG_WORKERS")]
    pub workers: Option<usize>,
    /// Tag entities heuristically for samples that carry no annotations
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_HEURISTIC_ENTITIES")]
    pub heuristic_entities: Option<bool>,
    /// Gazetteer for the heuristic tagger, as CATEGORY=PATH (repeatable)
    #[arg(long = "gazetteer", value_name = "CATEGORY=PATH")]
    #[serde(default, rename = "gazetteer")]
    pub gazetteers: Vec<String>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexOpts {
    /// Corpus to index (JSONL)
    #[arg(long, env = "FACTAUG_INPUT")]
    pub input: Option<PathBuf>,
    /// Entity index output (JSON)
    #[arg(long, env = "FACTAUG_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Abort on the first invalid input line instead of skipping it
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_STRICT")]
    pub strict: Option<bool>,
    /// Tag entities heuristically for samples that carry no annotations
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_HEURISTIC_ENTITIES")]
    pub heuristic_entities: Option<bool>,
    /// Gazetteer for the heuristic tagger, as CATEGORY=PATH (repeatable)
    #[arg(long = "gazetteer", value_name = "CATEGORY=PATH")]
    #[serde(default, rename = "gazetteer")]
    pub gazetteers: Vec<String>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentOpts {
    /// Input corpus (JSONL)
    #[arg(long, env = "FACTAUG_INPUT")]
    pub input: Option<PathBuf>,
    /// Augmented pairs output (JSONL)
    #[arg(long, env = "FACTAUG_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Skip report output (JSON); defaults to <output>.report.json
    #[arg(long, env = "FACTAUG_REPORT")]
    pub report: Option<PathBuf>,
    /// Perturbation strategy
    #[arg(long, value_name = "er|cat-er|wn-hyper", env = "FACTAUG_STRATEGY")]
    pub strategy: Option<String>,
    /// Run seed; every random choice derives from it
    #[arg(long, env = "FACTAUG_SEED")]
    pub seed: Option<u64>,
    /// Fraction of selected nouns to replace (wn-hyper)
    #[arg(long, env = "FACTAUG_NOUN_FRACTION")]
    pub noun_fraction: Option<f64>,
    /// Entities replaced per summary (er, cat-er)
    #[arg(long, env = "FACTAUG_ENTITIES_PER_SUMMARY")]
    pub entities_per_summary: Option<usize>,
    /// Directory holding WordNet index.noun and data.noun (wn-hyper)
    #[arg(long, env = "FACTAUG_WORDNET_DIR")]
    pub wordnet_dir: Option<PathBuf>,
    /// Prebuilt entity index (JSON); built from the input corpus when absent
    #[arg(long, env = "FACTAUG_INDEX")]
    pub index: Option<PathBuf>,
    /// Control code for original pairs
    #[arg(long, env = "FACTAUG_CODE_ORIGINAL")]
    pub code_original: Option<String>,
    /// Control code for entity-perturbed pairs
    #[arg(long, env = "FACTAUG_CODE_WRONG")]
    pub code_wrong: Option<String>,
    /// Control code for hypernym pairs
    #[arg(long, env = "FACTAUG_CODE_GENERAL")]
    pub code_general: Option<String>,
    /// Worker threads
    #[arg(long, env = "FACTAUG_WORKERS")]
    pub workers: Option<usize>,
    /// Abort on the first invalid input line instead of skipping it
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_STRICT")]
    pub strict: Option<bool>,
    /// Tag entities heuristically for samples that carry no annotations
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_HEURISTIC_ENTITIES")]
    pub heuristic_entities: Option<bool>,
    /// Gazetteer for the heuristic tagger, as CATEGORY=PATH (repeatable)
    #[arg(long = "gazetteer", value_name = "CATEGORY=PATH")]
    #[serde(default, rename = "gazetteer")]
    pub gazetteers: Vec<String>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateOpts {
    /// Corpus with documents and reference summaries (JSONL)
    #[arg(long, env = "FACTAUG_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Predictions, one {"id", "prediction"} object per line
    #[arg(long, env = "FACTAUG_PREDICTIONS")]
    pub predictions: Option<PathBuf>,
    /// Report output (JSON)
    #[arg(long, env = "FACTAUG_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Optional per-sample CSV output
    #[arg(long, env = "FACTAUG_CSV")]
    pub csv: Option<PathBuf>,
    /// Entailment backend: `lexical` or `http:<url>` / `http://...`
    #[arg(long, env = "FACTAUG_NLI_BACKEND")]
    pub nli_backend: Option<String>,
    /// Sentence aggregation
    #[arg(long, value_name = "strict|mean", env = "FACTAUG_AGGREGATION")]
    pub aggregation: Option<String>,
    /// Coverage threshold of the lexical backend
    #[arg(long, env = "FACTAUG_LEXICAL_THRESHOLD")]
    pub lexical_threshold: Option<f64>,
    /// Pairs per HTTP request
    #[arg(long, env = "FACTAUG_BATCH_SIZE")]
    pub batch_size: Option<usize>,
    /// Concurrent HTTP requests
    #[arg(long, env = "FACTAUG_MAX_IN_FLIGHT")]
    pub max_in_flight: Option<usize>,
    /// Attempts per HTTP request
    #[arg(long, env = "FACTAUG_RETRIES")]
    pub retries: Option<usize>,
    /// Abort on the first invalid corpus line instead of skipping it
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_STRICT")]
    pub strict: Option<bool>,
    /// Tag entities heuristically for samples that carry no annotations
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_HEURISTIC_ENTITIES")]
    pub heuristic_entities: Option<bool>,
    /// Gazetteer for the heuristic tagger, as CATEGORY=PATH (repeatable)
    #[arg(long = "gazetteer", value_name = "CATEGORY=PATH")]
    #[serde(default, rename = "gazetteer")]
    pub gazetteers: Vec<String>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsOpts {
    /// Corpus with source documents (JSONL)
    #[arg(long, env = "FACTAUG_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Predictions to analyse; reference summaries are used when absent
    #[arg(long, env = "FACTAUG_PREDICTIONS")]
    pub predictions: Option<PathBuf>,
    /// Statistics output (JSON); printed to stdout when absent
    #[arg(long, env = "FACTAUG_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Abort on the first invalid corpus line instead of skipping it
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_STRICT")]
    pub strict: Option<bool>,
    /// Tag entities heuristically for samples that carry no annotations
    #[arg(long, value_name = "on|off", num_args = 0..=1, default_missing_value = "on", value_parser = parse_switch, env = "FACTAUG_HEURISTIC_ENTITIES")]
    pub heuristic_entities: Option<bool>,
    /// Gazetteer for the heuristic tagger, as CATEGORY=PATH (repeatable)
    #[arg(long = "gazetteer", value_name = "CATEGORY=PATH")]
    #[serde(default, rename = "gazetteer")]
    pub gazetteers: Vec<String>,
}

macro_rules! tagger_opts {
    ($($opts:ty),*) => {
        $(impl $opts {
            pub fn tagger(&self) -> TaggerOpts {
                TaggerOpts {
                    heuristic_entities: self.heuristic_entities,
                    gazetteers: self.gazetteers.clone(),
                }
            }
        })*
    };
}

tagger_opts!(PreprocessOpts, IndexOpts, AugmentOpts, EvaluateOpts, StatsOpts);

pub fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

/// `flag.or(file)` for every field.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

fn vec_or(flag: Vec<String>, file: Vec<String>) -> Vec<String> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl Merge for PreprocessOpts {
    fn merge(self, f: Self) -> Self {
        PreprocessOpts {
            input: self.input.or(f.input),
            output: self.output.or(f.output),
            report: self.report.or(f.report),
            patterns: vec_or(self.patterns, f.patterns),
            boilerplate: self.boilerplate.or(f.boilerplate),
            entity_filter: self.entity_filter.or(f.entity_filter),
            case_sensitive: self.case_sensitive.or(f.case_sensitive),
            strict: self.strict.or(f.strict),
            workers: self.workers.or(f.workers),
            heuristic_entities: self.heuristic_entities.or(f.heuristic_entities),
            gazetteers: vec_or(self.gazetteers, f.gazetteers),
        }
    }
}

impl Merge for IndexOpts {
    fn merge(self, f: Self) -> Self {
        IndexOpts {
            input: self.input.or(f.input),
            output: self.output.or(f.output),
            strict: self.strict.or(f.strict),
            heuristic_entities: self.heuristic_entities.or(f.heuristic_entities),
            gazetteers: vec_or(self.gazetteers, f.gazetteers),
        }
    }
}

impl Merge for AugmentOpts {
    fn merge(self, f: Self) -> Self {
        AugmentOpts {
            input: self.input.or(f.input),
            output: self.output.or(f.output),
            report: self.report.or(f.report),
            strategy: self.strategy.or(f.strategy),
            seed: self.seed.or(f.seed),
            noun_fraction: self.noun_fraction.or(f.noun_fraction),
            entities_per_summary: self.entities_per_summary.or(f.entities_per_summary),
            wordnet_dir: self.wordnet_dir.or(f.wordnet_dir),
            index: self.index.or(f.index),
            code_original: self.code_original.or(f.code_original),
            code_wrong: self.code_wrong.or(f.code_wrong),
            code_general: self.code_general.or(f.code_general),
            workers: self.workers.or(f.workers),
            strict: self.strict.or(f.strict),
            heuristic_entities: self.heuristic_entities.or(f.heuristic_entities),
            gazetteers: vec_or(self.gazetteers, f.gazetteers),
        }
    }
}

impl Merge for EvaluateOpts {
    fn merge(self, f: Self) -> Self {
        EvaluateOpts {
            corpus: self.corpus.or(f.corpus),
            predictions: self.predictions.or(f.predictions),
            output: self.output.or(f.output),
            csv: self.csv.or(f.csv),
            nli_backend: self.nli_backend.or(f.nli_backend),
            aggregation: self.aggregation.or(f.aggregation),
            lexical_threshold: self.lexical_threshold.or(f.lexical_threshold),
            batch_size: self.batch_size.or(f.batch_size),
            max_in_flight: self.max_in_flight.or(f.max_in_flight),
            retries: self.retries.or(f.retries),
            strict: self.strict.or(f.strict),
            heuristic_entities: self.heuristic_entities.or(f.heuristic_entities),
            gazetteers: vec_or(self.gazetteers, f.gazetteers),
        }
    }
}

impl Merge for StatsOpts {
    fn merge(self, f: Self) -> Self {
        StatsOpts {
            corpus: self.corpus.or(f.corpus),
            predictions: self.predictions.or(f.predictions),
            output: self.output.or(f.output),
            strict: self.strict.or(f.strict),
            heuristic_entities: self.heuristic_entities.or(f.heuristic_entities),
            gazetteers: vec_or(self.gazetteers, f.gazetteers),
        }
    }
}

/// Resolved tagger settings echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct TaggerConfig {
    pub heuristic_entities: bool,
    pub gazetteers: BTreeMap<String, Vec<PathBuf>>,
}

impl TaggerOpts {
    pub fn resolve(&self) -> Result<TaggerConfig> {
        let mut gazetteers: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
        for spec in &self.gazetteers {
            let Some((category, path)) = spec.split_once('=') else {
                bail!("gazetteer {spec:?} must look like CATEGORY=PATH");
            };
            let path = PathBuf::from(path);
            require_file(&path, "gazetteer")?;
            gazetteers.entry(category.to_string()).or_default().push(path);
        }
        Ok(TaggerConfig {
            heuristic_entities: self.heuristic_entities.unwrap_or(false),
            gazetteers,
        })
    }
}

pub fn required<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
    value
        .clone()
        .with_context(|| format!("missing required option --{name}"))
}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} not found: {}", path.display());
    }
    Ok(())
}

/// `<output>.report.json` next to the main output.
pub fn default_report_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".report.json");
    output.with_file_name(name)
}
