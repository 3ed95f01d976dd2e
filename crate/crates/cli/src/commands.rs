use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use factaug::annotate::{annotate_missing, heuristic_entities, Gazetteers};
use factaug::corpus::{read_corpus, write_pairs, write_samples, ReadOutcome};
use factaug::metrics::{
    analysis_stats, evaluate as score, Aggregation, EntailmentBackend, EvalItem, HttpBackend, LexicalBackend,
};
use factaug::perturb::{augment_corpus, AugmentConfig, ControlCodes, DEFAULT_SEED};
use factaug::preprocess::{FilterConfig, FilterDecision, Pattern, RemovalKind};
use factaug::{EntityIndex, Sample, Strategy, SynsetGraph};

use crate::config::{
    default_report_path, require_file, required, AugmentOpts, EvaluateOpts, IndexOpts, Merge, PreprocessOpts,
    StatsOpts, TaggerConfig, TaggerOpts,
};
use crate::{Failure, ResultExt};

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Report object with the resolved configuration under `"config"`.
fn with_config(report: impl Serialize, config: Value) -> Value {
    let mut value = serde_json::to_value(report).expect("reports serialize");
    match &mut value {
        Value::Object(map) => {
            map.insert("config".to_string(), config);
            value
        }
        other => json!({ "config": config, "report": other.take() }),
    }
}

fn load_corpus(path: &Path, strict: bool) -> Result<ReadOutcome, Failure> {
    require_file(path, "input corpus").usage()?;
    read_corpus(path, strict).data()
}

fn load_gazetteers(cfg: &TaggerConfig) -> anyhow::Result<Gazetteers> {
    let mut gz = Gazetteers::new();
    for (category, paths) in &cfg.gazetteers {
        for path in paths {
            gz.load_file(category, path)
                .with_context(|| format!("cannot read gazetteer {}", path.display()))?;
        }
    }
    Ok(gz)
}

/// Resolves tagger options and, when enabled, fills missing annotations.
fn tag_corpus(samples: &mut [Sample], opts: &TaggerOpts) -> Result<(TaggerConfig, Gazetteers), Failure> {
    let cfg = opts.resolve().usage()?;
    let gz = load_gazetteers(&cfg).usage()?;
    if cfg.heuristic_entities {
        for s in samples.iter_mut() {
            annotate_missing(s, &gz);
        }
    }
    Ok((cfg, gz))
}

fn skipped_lines(outcome: &ReadOutcome) -> Vec<String> {
    outcome.skipped.iter().map(ToString::to_string).collect()
}

/// Maps `f` over `items` on a pool of `workers` threads, keeping input order.
fn ordered_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync + Send,
) -> anyhow::Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

#[derive(Serialize)]
struct DropItem<'a> {
    id: &'a str,
    kind: &'a RemovalKind,
    sentence: &'a str,
    reason: &'a str,
}

pub fn preprocess(flags: PreprocessOpts, file: PreprocessOpts) -> Result<(), Failure> {
    let opts = flags.merge(file);
    let input = required(&opts.input, "input").usage()?;
    let output = required(&opts.output, "output").usage()?;
    let report_path = opts.report.clone().unwrap_or_else(|| default_report_path(&output));
    let filter = FilterConfig {
        boilerplate: opts.boilerplate.unwrap_or(true),
        boilerplate_patterns: if opts.patterns.is_empty() {
            FilterConfig::default().boilerplate_patterns
        } else {
            opts.patterns.iter().map(|p| Pattern::parse(p)).collect()
        },
        entity_filter: opts.entity_filter.unwrap_or(true),
        case_sensitive: opts.case_sensitive.unwrap_or(false),
    };
    let cleaner = filter.compile().usage()?;
    let strict = opts.strict.unwrap_or(false);
    let workers = opts.workers.unwrap_or(1);

    let mut outcome = load_corpus(&input, strict)?;
    let (tagger, _) = tag_corpus(&mut outcome.samples, &opts.tagger())?;
    let decisions = ordered_map(&outcome.samples, workers, |s| cleaner.clean(s)).usage()?;

    let mut kept = Vec::new();
    let mut removals = Vec::new();
    let mut dropped = Vec::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, decision) in outcome.samples.iter().zip(&decisions) {
        for r in decision.removed() {
            let key = match r.kind {
                RemovalKind::Boilerplate => "boilerplate_sentences",
                RemovalKind::UnsupportedEntity => "unsupported_entity_sentences",
            };
            *counts.entry(key).or_default() += 1;
            removals.push(DropItem {
                id: &s.id,
                kind: &r.kind,
                sentence: &r.sentence,
                reason: &r.reason,
            });
        }
        match decision {
            FilterDecision::Keep { sample, .. } => kept.push(sample),
            FilterDecision::Drop { reason, .. } => dropped.push(json!({ "id": s.id, "reason": reason })),
        }
    }
    write_samples(kept.iter().copied(), &output).data()?;

    let config = json!({
        "command": "preprocess",
        "input": input,
        "output": output,
        "report": report_path,
        "filter": filter,
        "strict": strict,
        "workers": workers,
        "tagger": tagger,
    });
    let report = json!({
        "samples": outcome.samples.len(),
        "kept": kept.len(),
        "dropped": dropped.len(),
        "boilerplate_sentences": counts.get("boilerplate_sentences").copied().unwrap_or(0),
        "unsupported_entity_sentences": counts.get("unsupported_entity_sentences").copied().unwrap_or(0),
        "removals": removals,
        "dropped_samples": dropped,
        "skipped_lines": skipped_lines(&outcome),
    });
    write_json(&report_path, &with_config(report, config)).data()
}

pub fn index(flags: IndexOpts, file: IndexOpts) -> Result<(), Failure> {
    let opts = flags.merge(file);
    let input = required(&opts.input, "input").usage()?;
    let output = required(&opts.output, "output").usage()?;
    let mut outcome = load_corpus(&input, opts.strict.unwrap_or(false))?;
    tag_corpus(&mut outcome.samples, &opts.tagger())?;
    let idx = EntityIndex::build(&outcome.samples, input.display().to_string());
    let value = serde_json::to_value(&idx).expect("index serializes");
    write_json(&output, &value).data()
}

fn parse_strategy(raw: &str) -> anyhow::Result<Strategy> {
    match raw.to_ascii_lowercase().replace('_', "-").as_str() {
        "er" => Ok(Strategy::Er),
        "cat-er" => Ok(Strategy::CatEr),
        "wn-hyper" => Ok(Strategy::WnHyper),
        _ => bail!("unknown strategy {raw:?} (expected er, cat-er or wn-hyper)"),
    }
}

pub fn augment(flags: AugmentOpts, file: AugmentOpts) -> Result<(), Failure> {
    let opts = flags.merge(file);
    let input = required(&opts.input, "input").usage()?;
    let output = required(&opts.output, "output").usage()?;
    let report_path = opts.report.clone().unwrap_or_else(|| default_report_path(&output));
    let strategy = parse_strategy(&required(&opts.strategy, "strategy").usage()?).usage()?;
    let defaults = ControlCodes::default();
    let cfg = AugmentConfig {
        strategy,
        seed: opts.seed.unwrap_or(DEFAULT_SEED),
        noun_fraction: opts.noun_fraction.unwrap_or(0.3),
        entities_per_summary: opts.entities_per_summary.unwrap_or(1),
        control_codes: ControlCodes {
            original: opts.code_original.clone().unwrap_or(defaults.original),
            wrong: opts.code_wrong.clone().unwrap_or(defaults.wrong),
            general: opts.code_general.clone().unwrap_or(defaults.general),
        },
    };
    cfg.validate().usage()?;
    let workers = opts.workers.unwrap_or(1);
    let strict = opts.strict.unwrap_or(false);

    let graph = match strategy {
        Strategy::WnHyper => {
            let dir = required(&opts.wordnet_dir, "wordnet-dir").usage()?;
            let (index_noun, data_noun) = factaug::wordnet::noun_files(&dir);
            require_file(&index_noun, "WordNet index").usage()?;
            require_file(&data_noun, "WordNet data").usage()?;
            Some(SynsetGraph::load(&index_noun, &data_noun).data()?)
        }
        _ => None,
    };

    let mut outcome = load_corpus(&input, strict)?;
    let (tagger, _) = tag_corpus(&mut outcome.samples, &opts.tagger())?;
    let index = match (strategy, &opts.index) {
        (Strategy::WnHyper, _) => None,
        (_, Some(path)) => {
            require_file(path, "entity index").usage()?;
            let text = std::fs::read_to_string(path).data()?;
            Some(
                serde_json::from_str::<EntityIndex>(&text)
                    .context("invalid entity index")
                    .data()?,
            )
        }
        (_, None) => Some(EntityIndex::build(&outcome.samples, input.display().to_string())),
    };

    let out = augment_corpus(&outcome.samples, &cfg, index.as_ref(), graph.as_ref(), workers).usage()?;
    write_pairs(&out.pairs, &output).data()?;

    let config = json!({
        "command": "augment",
        "input": input,
        "output": output,
        "report": report_path,
        "augment": cfg,
        "wordnet_dir": opts.wordnet_dir,
        "index": opts.index,
        "strict": strict,
        "workers": workers,
        "tagger": tagger,
    });
    let mut report = with_config(&out.report, config);
    report["pairs"] = json!(out.pairs.len());
    report["skipped_lines"] = json!(skipped_lines(&outcome));
    write_json(&report_path, &report).data()
}

#[derive(Deserialize)]
struct Prediction {
    id: String,
    prediction: String,
}

fn read_predictions(path: &Path) -> anyhow::Result<HashMap<String, String>> {
    let file = File::open(path).with_context(|| format!("cannot open predictions {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: malformed prediction", path.display(), i + 1))?;
        if out.insert(p.id.clone(), p.prediction).is_some() {
            bail!("{}:{}: duplicate prediction id {:?}", path.display(), i + 1, p.id);
        }
    }
    Ok(out)
}

/// Predictions in corpus order; every corpus id must have one.
fn match_predictions<'a>(samples: &[Sample], predictions: &'a HashMap<String, String>) -> anyhow::Result<Vec<&'a str>> {
    let missing: Vec<&str> = samples
        .iter()
        .filter(|s| !predictions.contains_key(&s.id))
        .map(|s| s.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(anyhow!(
            "missing predictions for {} ids: {}",
            missing.len(),
            missing.join(", ")
        ));
    }
    Ok(samples.iter().map(|s| predictions[&s.id].as_str()).collect())
}

enum BackendChoice {
    Lexical(LexicalBackend),
    Http(HttpBackend),
}

impl BackendChoice {
    fn as_dyn(&self) -> &dyn EntailmentBackend {
        match self {
            BackendChoice::Lexical(b) => b,
            BackendChoice::Http(b) => b,
        }
    }
}

fn parse_backend(raw: &str, opts: &EvaluateOpts) -> anyhow::Result<BackendChoice> {
    if raw == "lexical" {
        let threshold = opts.lexical_threshold.unwrap_or(LexicalBackend::default().threshold);
        if !(0.0..=1.0).contains(&threshold) {
            bail!("lexical threshold must lie in [0, 1]");
        }
        return Ok(BackendChoice::Lexical(LexicalBackend { threshold }));
    }
    let url = raw
        .strip_prefix("http:")
        .filter(|rest| !rest.starts_with("//"))
        .unwrap_or(raw);
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        bail!("unknown NLI backend {raw:?} (expected lexical or http:<url>)");
    }
    let mut http = HttpBackend::new(url);
    if let Some(n) = opts.batch_size {
        http.batch_size = n.max(1);
    }
    if let Some(n) = opts.max_in_flight {
        http.max_in_flight = n.max(1);
    }
    if let Some(n) = opts.retries {
        http.attempts = n.max(1);
    }
    Ok(BackendChoice::Http(http))
}

fn write_csv(path: &Path, report: &factaug::EvalReport64) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record([
        "id",
        "rouge1_f1",
        "rouge2_f1",
        "rougeL_f1",
        "nli_score",
        "entity_count",
        "novel_bigram_ratio",
    ])?;
    for s in &report.per_sample {
        w.write_record([
            s.id.clone(),
            s.rouge1.f1.to_string(),
            s.rouge2.f1.to_string(),
            s.rouge_l.f1.to_string(),
            s.nli_score.to_string(),
            s.entity_count.to_string(),
            s.novel_bigram_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(flags: EvaluateOpts, file: EvaluateOpts) -> Result<(), Failure> {
    let opts = flags.merge(file);
    let corpus_path = required(&opts.corpus, "corpus").usage()?;
    let predictions_path = required(&opts.predictions, "predictions").usage()?;
    let output = required(&opts.output, "output").usage()?;
    require_file(&predictions_path, "predictions").usage()?;
    let backend_spec = opts.nli_backend.clone().unwrap_or_else(|| "lexical".to_string());
    let backend = parse_backend(&backend_spec, &opts).usage()?;
    let aggregation: Aggregation = opts
        .aggregation
        .as_deref()
        .unwrap_or("strict")
        .parse()
        .map_err(|e: String| anyhow!(e))
        .usage()?;
    let strict = opts.strict.unwrap_or(false);

    let mut outcome = load_corpus(&corpus_path, strict)?;
    let (tagger, gz) = tag_corpus(&mut outcome.samples, &opts.tagger())?;
    let predictions = read_predictions(&predictions_path).data()?;
    let preds = match_predictions(&outcome.samples, &predictions).data()?;
    let items: Vec<EvalItem> = outcome
        .samples
        .iter()
        .zip(&preds)
        .map(|(s, p)| EvalItem {
            id: &s.id,
            document: &s.document,
            reference: &s.summary,
            prediction: p,
            entity_count: heuristic_entities(p, &gz).len(),
        })
        .collect();
    let report = score::<f64>(&items, backend.as_dyn(), aggregation).backend()?;
    let extra = predictions.len() - preds.len();

    if let Some(csv_path) = &opts.csv {
        write_csv(csv_path, &report).data()?;
    }
    let config = json!({
        "command": "evaluate",
        "corpus": corpus_path,
        "predictions": predictions_path,
        "output": output,
        "csv": opts.csv,
        "nli_backend": backend_spec,
        "aggregation": aggregation,
        "lexical_threshold": opts.lexical_threshold.unwrap_or(LexicalBackend::default().threshold),
        "batch_size": opts.batch_size.unwrap_or(32),
        "max_in_flight": opts.max_in_flight.unwrap_or(4),
        "retries": opts.retries.unwrap_or(3),
        "strict": strict,
        "tagger": tagger,
    });
    let mut value = with_config(&report, config);
    value["unmatched_predictions"] = json!(extra);
    value["skipped_lines"] = json!(skipped_lines(&outcome));
    write_json(&output, &value).data()
}

pub fn stats(flags: StatsOpts, file: StatsOpts) -> Result<(), Failure> {
    let opts = flags.merge(file);
    let corpus_path = required(&opts.corpus, "corpus").usage()?;
    if let Some(p) = &opts.predictions {
        require_file(p, "predictions").usage()?;
    }
    let mut outcome = load_corpus(&corpus_path, opts.strict.unwrap_or(false))?;
    let (tagger, gz) = tag_corpus(&mut outcome.samples, &opts.tagger())?;
    let predictions = match &opts.predictions {
        Some(path) => read_predictions(path).data()?,
        None => HashMap::new(),
    };
    let (candidates, counts): (Vec<&str>, Vec<usize>) = if opts.predictions.is_some() {
        let preds = match_predictions(&outcome.samples, &predictions).data()?;
        let counts = preds.iter().map(|p| heuristic_entities(p, &gz).len()).collect();
        (preds, counts)
    } else {
        (
            outcome.samples.iter().map(|s| s.summary.as_str()).collect(),
            outcome.samples.iter().map(|s| s.summary_entities.len()).collect(),
        )
    };
    let pairs: Vec<(&str, &str)> = outcome
        .samples
        .iter()
        .zip(&candidates)
        .map(|(s, c)| (s.document.as_str(), *c))
        .collect();
    let stats: factaug::AnalysisStats64 = analysis_stats(&pairs, &counts);
    let config = json!({
        "command": "stats",
        "corpus": corpus_path,
        "predictions": opts.predictions,
        "output": opts.output,
        "tagger": tagger,
    });
    let mut value = with_config(stats, config);
    value["samples"] = json!(pairs.len());
    match &opts.output {
        Some(path) => write_json(path, &value).data(),
        None => {
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            Ok(())
        }
    }
}
