//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use factaug::corpus::{read_corpus, write_pairs_to};
use factaug::metrics::{evaluate, lcs_len, rouge_l, rouge_n, Aggregation, EvalItem, LexicalBackend};
use factaug::perturb::augment_corpus;
use factaug::preprocess::{split_sentences, FilterConfig};
use factaug::wordnet::noun_files;
use factaug::{AugmentConfig, AugmentedPair, EntityIndex, EntityMention, Sample, Strategy, SynsetGraph, Transform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn wordnet_dir() -> PathBuf {
    std::env::var_os("FACTAUG_WORDNET_DIR").map_or_else(|| root().join("data/wordnet-3.0"), PathBuf::from)
}

fn mini_corpus() -> Vec<Sample> {
    read_corpus(&root().join("data/mini_corpus.jsonl"), true)
        .expect("mini corpus is valid")
        .samples
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_s), || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn factaug(args: &[&str]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_factaug"));
    for (k, _) in std::env::vars() {
        if k.starts_with("FACTAUG_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let out = factaug(args);
    ensure(out.status.success(), || {
        format!(
            "factaug {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn pairs_bytes(pairs: &[AugmentedPair]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pairs_to(pairs, &mut buf).expect("in-memory write");
    buf
}

// ---------------------------------------------------------------- criteria

fn non_reproducibility() -> Outcome {
    let readme = std::fs::read_to_string(root().join("README.md")).map_err(|e| format!("README.md: {e}"))?;
    ensure(
        readme.contains("61.0") && readme.contains("64.2") && readme.contains("not reproduced"),
        || "README lacks the non-reproducibility statement".to_string(),
    )?;
    Ok("model-training results are stated as not reproduced; acceptance rests on the suites below".to_string())
}

/// Longest common subsequence by exhaustive subset search.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let is_subseq = |mask: u32| {
        let mut it = long.iter();
        (0..short.len())
            .filter(|i| mask >> i & 1 == 1)
            .all(|i| it.any(|&x| x == short[i]))
    };
    (0..1u32 << short.len())
        .filter(|&m| is_subseq(m))
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn oracle_f1(lcs: usize, cand: usize, reference: usize) -> f64 {
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand as f64;
    let r = lcs as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

fn sequences(max_len: usize) -> Vec<Vec<u8>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u8>| (0..3u8).map(move |c| [s.as_slice(), &[c]].concat()))
            .collect();
        all.extend(frontier.iter().cloned());
    }
    all
}

fn render(seq: &[u8]) -> String {
    seq.iter()
        .map(|&c| ["a", "b", "c"][c as usize])
        .collect::<Vec<_>>()
        .join(" ")
}

fn rouge_oracle() -> Outcome {
    let t0 = Instant::now();
    let seqs = sequences(8);
    let texts: Vec<String> = seqs.iter().map(|s| render(s)).collect();
    let check = |i: usize, j: usize| -> Result<(), String> {
        let (a, b) = (&seqs[i], &seqs[j]);
        let want = brute_lcs(a, b);
        let got = lcs_len(a, b);
        let f1 = rouge_l::<f64>(&texts[i], &texts[j]).f1;
        ensure(got == want && f1 == oracle_f1(want, a.len(), b.len()), || {
            format!("{:?} vs {:?}: lcs {got} (oracle {want}), f1 {f1}", texts[i], texts[j])
        })
    };
    // every pair whose combined length is at most 8
    let mut exhaustive = 0;
    for i in 0..seqs.len() {
        for j in 0..seqs.len() {
            if seqs[i].len() + seqs[j].len() <= 8 {
                check(i, j)?;
                exhaustive += 1;
            }
        }
    }
    // random pairs of full-length sequences
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sampled = 20_000;
    for _ in 0..sampled {
        check(rng.gen_range(0..seqs.len()), rng.gen_range(0..seqs.len()))?;
    }

    let third = 1.0 / 3.0;
    #[rustfmt::skip]
    let cases: [(&str, &str, usize, [f64; 3]); 20] = [
        ("the cat sat on the mat", "the cat sat on the mat", 1, [1.0, 1.0, 1.0]),
        ("the cat sat on the mat", "the cat sat on the mat", 2, [1.0, 1.0, 1.0]),
        ("the cat", "the cat sat", 1, [1.0, 2.0 * third, 0.8]),
        ("the cat", "the cat sat", 2, [1.0, 0.5, 2.0 * third]),
        ("the the the", "the cat", 1, [third, 0.5, 0.4]),
        ("a b c d", "d c b a", 1, [1.0, 1.0, 1.0]),
        ("a b c d", "d c b a", 2, [0.0, 0.0, 0.0]),
        ("", "a", 1, [0.0, 0.0, 0.0]),
        ("a", "", 1, [0.0, 0.0, 0.0]),
        ("a", "a", 2, [0.0, 0.0, 0.0]),
        ("Police arrested two men.", "Two men were arrested by police", 1, [1.0, 2.0 * third, 0.8]),
        ("Police arrested two men.", "Two men were arrested by police", 2, [third, 0.2, 0.25]),
        ("a a b", "a b b", 1, [2.0 * third, 2.0 * third, 2.0 * third]),
        ("a a b", "a b b", 2, [0.5, 0.5, 0.5]),
        ("x y z", "a b c", 1, [0.0, 0.0, 0.0]),
        ("It's 3.5 per-cent", "its 3 5 per cent", 1, [2.0 * third, 0.8, 8.0 / 11.0]),
        ("It's 3.5 per-cent", "its 3 5 per cent", 2, [0.6, 0.75, 2.0 * third]),
        ("a b a b a", "a b", 2, [0.25, 1.0, 0.4]),
        ("A B C", "a b c", 1, [1.0, 1.0, 1.0]),
        ("the cat sat", "the cat", 1, [2.0 * third, 1.0, 0.8]),
    ];
    for (cand, reference, n, [p, r, f]) in cases {
        let got = rouge_n::<f64>(cand, reference, n);
        ensure(
            (got.precision - p).abs() <= 1e-9 && (got.recall - r).abs() <= 1e-9 && (got.f1 - f).abs() <= 1e-9,
            || format!("ROUGE-{n} {cand:?} vs {reference:?}: got {got:?}, want P {p} R {r} F {f}"),
        )?;
    }
    let elapsed = t0.elapsed();
    within(elapsed, 10)?;
    Ok(format!(
        "{exhaustive} exhaustive + {sampled} sampled LCS pairs exact, {} ROUGE-1/2 cases within 1e-9, {:.2}s",
        cases.len(),
        elapsed.as_secs_f64()
    ))
}

/// First-sense first-hypernym answer read straight from the raw files.
struct RawWordNet {
    index: HashMap<String, u64>,
    data: File,
}

impl RawWordNet {
    fn open(dir: &Path) -> std::io::Result<Self> {
        let (index_path, data_path) = noun_files(dir);
        let mut index = HashMap::new();
        for line in BufReader::new(File::open(index_path)?).lines() {
            let line = line?;
            if line.starts_with(' ') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let synset_cnt: usize = fields[2].parse().expect("synset_cnt");
            let first = fields[fields.len() - synset_cnt].parse().expect("offset");
            index.insert(fields[0].to_string(), first);
        }
        Ok(RawWordNet {
            index,
            data: File::open(data_path)?,
        })
    }

    fn record(&mut self, offset: u64) -> String {
        self.data.seek(SeekFrom::Start(offset)).expect("seek");
        let mut buf = Vec::new();
        let mut byte = [0u8];
        while self.data.read(&mut byte).expect("read") == 1 && byte[0] != b'\n' {
            buf.push(byte[0]);
        }
        let line = String::from_utf8(buf).expect("utf8");
        assert!(
            line.starts_with(&format!("{offset:08} ")),
            "record at {offset} starts {line:?}"
        );
        line
    }

    fn hypernym(&mut self, lemma: &str) -> Option<String> {
        let offset = *self.index.get(lemma)?;
        let record = self.record(offset);
        let fields: Vec<&str> = record.split(" | ").next().unwrap().split_whitespace().collect();
        let words = usize::from_str_radix(fields[3], 16).expect("w_cnt");
        let ptr_at = 4 + 2 * words;
        let ptrs: usize = fields[ptr_at].parse().expect("p_cnt");
        let target = (0..ptrs)
            .map(|k| &fields[ptr_at + 1 + 4 * k..ptr_at + 5 + 4 * k])
            .find(|p| p[0] == "@" || p[0] == "@i")
            .map(|p| p[1].parse::<u64>().expect("pointer offset"))?;
        let hyper = self.record(target);
        Some(hyper.split_whitespace().nth(4).unwrap().replace('_', " "))
    }
}

fn wordnet_integrity(graph: &SynsetGraph, load_time: Duration) -> Outcome {
    let t0 = Instant::now();
    let order = graph.topological_order().map_err(|e| e.to_string())?;
    ensure(order.len() == graph.synset_count(), || {
        "topological order misses synsets".to_string()
    })?;
    let mut raw = RawWordNet::open(&wordnet_dir()).map_err(|e| e.to_string())?;
    ensure(raw.index.len() == graph.lemma_count(), || {
        format!("{} raw index lemmas vs {} parsed", raw.index.len(), graph.lemma_count())
    })?;
    let mut lemmas: Vec<String> = raw.index.keys().cloned().collect();
    lemmas.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let picked: Vec<&String> = lemmas.choose_multiple(&mut rng, 100).collect();
    let mut with_hypernym = 0;
    for lemma in picked {
        let spaced = lemma.replace('_', " ");
        let want = raw.hypernym(lemma);
        let got = graph.hypernym_of(&spaced).map(str::to_string);
        ensure(got == want, || format!("{lemma}: parsed {got:?}, raw {want:?}"))?;
        with_hypernym += usize::from(want.is_some());
    }
    let elapsed = load_time + t0.elapsed();
    within(elapsed, 30)?;
    Ok(format!(
        "{} synsets, {} lemmas, DAG; 100 sampled lemmas agree ({with_hypernym} with hypernyms), {:.2}s",
        graph.synset_count(),
        graph.lemma_count(),
        elapsed.as_secs_f64()
    ))
}

fn run_strategy(
    corpus: &[Sample],
    strategy: Strategy,
    index: &EntityIndex,
    graph: &SynsetGraph,
    workers: usize,
) -> Result<factaug::perturb::AugmentOutput, String> {
    augment_corpus(corpus, &AugmentConfig::new(strategy), Some(index), Some(graph), workers).map_err(|e| e.to_string())
}

fn augmentation_invariants(graph: &SynsetGraph) -> Outcome {
    let t0 = Instant::now();
    let corpus = mini_corpus();
    let index = EntityIndex::build(&corpus, "mini");
    let by_id: HashMap<&str, &Sample> = corpus.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut summary = Vec::new();
    for strategy in [Strategy::Er, Strategy::CatEr, Strategy::WnHyper] {
        let out = run_strategy(&corpus, strategy, &index, graph, 1)?;
        let r = &out.report;
        let originals = out.pairs.iter().filter(|p| p.transform == Transform::Original).count();
        let transformed = out.pairs.len() - originals;
        ensure(r.originals == 50 && originals == 50, || {
            format!("{strategy}: {originals} originals")
        })?;
        ensure(r.transformed == 50 - r.skipped && transformed == r.transformed, || {
            format!("{strategy}: {transformed} transformed, {} skipped", r.skipped)
        })?;
        for p in out.pairs.iter().filter(|p| p.transform != Transform::Original) {
            let id = p.id.split("::").next().unwrap();
            let s = by_id[id];
            ensure(p.target != s.summary && !p.provenance.is_empty(), || {
                format!("{}: unchanged target", p.id)
            })?;
            for prov in &p.provenance {
                let ok = match strategy {
                    Strategy::Er => {
                        prov.repl != prov.orig
                            && !s.document.to_lowercase().contains(&prov.repl.to_lowercase())
                            && s.summary_entities.iter().any(|m| m.text == prov.orig)
                    }
                    Strategy::CatEr => {
                        let cats: HashSet<&str> = s
                            .summary_entities
                            .iter()
                            .filter(|m| m.text == prov.orig)
                            .map(|m| m.category.as_str())
                            .collect();
                        prov.repl != prov.orig
                            && cats.iter().any(|c| index.by_category[*c].contains(&prov.repl))
                            && !s.document.to_lowercase().contains(&prov.repl.to_lowercase())
                    }
                    Strategy::WnHyper => {
                        let sense = graph.first_sense(&prov.orig);
                        let hyper = graph.hypernym_synset(&prov.orig);
                        match (sense, hyper) {
                            (Some(sense), Some(hyper)) => {
                                graph.synset(sense).unwrap().hypernyms.contains(&hyper)
                                    && graph.synset(hyper).unwrap().lemmas.first() == Some(&prov.repl)
                                    && graph.is_strict_ancestor(sense, hyper)
                            }
                            _ => false,
                        }
                    }
                };
                let at = p
                    .target
                    .chars()
                    .skip(prov.start)
                    .take(prov.repl.chars().count())
                    .collect::<String>();
                ensure(ok && at == prov.repl, || format!("{}: bad provenance {prov:?}", p.id))?;
            }
        }
        summary.push(format!("{strategy} {}/50", r.transformed));
    }
    let elapsed = t0.elapsed();
    within(elapsed, 5)?;
    Ok(format!(
        "{} transformed, {:.2}s",
        summary.join(", "),
        elapsed.as_secs_f64()
    ))
}

fn determinism(graph: &SynsetGraph) -> Outcome {
    let corpus = mini_corpus();
    let index = EntityIndex::build(&corpus, "mini");
    for strategy in [Strategy::Er, Strategy::CatEr, Strategy::WnHyper] {
        let a = pairs_bytes(&run_strategy(&corpus, strategy, &index, graph, 1)?.pairs);
        let b = pairs_bytes(&run_strategy(&corpus, strategy, &index, graph, 1)?.pairs);
        let c = pairs_bytes(&run_strategy(&corpus, strategy, &index, graph, 8)?.pairs);
        ensure(a == b && a == c, || format!("{strategy}: library output differs"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = root().join("data/mini_corpus.jsonl");
    let wn = wordnet_dir();
    for strategy in ["er", "cat-er", "wn-hyper"] {
        let mut outputs = Vec::new();
        for (run, workers) in [(0, "1"), (1, "1"), (2, "8")] {
            let out = dir.path().join(format!("{strategy}-{run}.jsonl"));
            run_ok(&[
                "augment",
                "--input",
                input.to_str().unwrap(),
                "--output",
                out.to_str().unwrap(),
                "--strategy",
                strategy,
                "--wordnet-dir",
                wn.to_str().unwrap(),
                "--seed",
                "7",
                "--workers",
                workers,
            ])?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1] && outputs[0] == outputs[2], || {
            format!("{strategy}: CLI output differs between runs or worker counts")
        })?;
    }
    Ok("library and CLI output byte-identical across repeat runs and --workers 1 vs 8, all strategies".to_string())
}

fn mention(host: &str, text: &str, category: &str) -> EntityMention {
    let byte = host.find(text).expect("mention occurs");
    let start = host[..byte].chars().count();
    EntityMention {
        start,
        end: start + text.chars().count(),
        text: text.to_string(),
        category: category.to_string(),
    }
}

fn annotated(id: String, document: String, summary: String, entities: &[(&str, &str)]) -> Sample {
    let mut s = Sample::new(id, document, summary);
    for &(text, category) in entities {
        if s.document.contains(text) {
            s.document_entities.push(mention(&s.document, text, category));
        }
        if s.summary.contains(text) {
            s.summary_entities.push(mention(&s.summary, text, category));
        }
    }
    s.document_entities.sort_by_key(|m| m.start);
    s.summary_entities.sort_by_key(|m| m.start);
    s
}

// entries without a closing terminator sit at odd indices, which place them last
const PLANTED_BOILERPLATE: [&str; 10] = [
    "Please copy this link to share the story.",
    "Share this with Email, Facebook, Messenger",
    "Share this with Email, Facebook, Messenger or by text.",
    "Share this with Email, Facebook, Messenger, Twitter, Pinterest, WhatsApp, LinkedIn",
    "Readers can copy this link.",
    "Copy this link",
    "Share this with Email, Facebook, Messenger today.",
    "SHARE THIS WITH EMAIL, FACEBOOK, MESSENGER",
    "You may copy this link.",
    "Copy this link now.",
];

fn preprocessing() -> Outcome {
    let people = ["Alice Moore", "Ben Hart", "Cara Lane", "Dev Patel", "Eve Stone"];
    let cities = ["Leeds", "York", "Bath", "Derby", "Hull"];
    let outsiders = ["Zoe Quinn", "Max Cole", "Ian Ross", "Tom Reed", "Amy Wood"];
    let mut corpus = Vec::new();
    let mut planted_unsupported = Vec::new();
    for i in 0..10 {
        let (person, city) = (people[i % 5], cities[(i + 2) % 5]);
        let bp = PLANTED_BOILERPLATE[i];
        // boilerplate sits mid-document for even samples, at the end for odd ones
        let document = if i % 2 == 0 {
            format!(
                "{person} opened a library in {city}. {bp} The library has {} rooms.",
                i + 3
            )
        } else {
            format!(
                "{person} opened a library in {city}. The library has {} rooms. {bp}",
                i + 3
            )
        };
        let mut summary = format!("{person} opened a library in {city}.");
        if i < 5 {
            let extra = format!("{} praised the plan.", outsiders[i]);
            summary.push(' ');
            summary.push_str(&extra);
            planted_unsupported.push((
                format!("syn-{i}"),
                extra,
                format!("unsupported entity: {}", outsiders[i]),
            ));
        }
        corpus.push(annotated(
            format!("syn-{i}"),
            document,
            summary,
            &[(person, "PERSON"), (city, "GPE"), (outsiders[i % 5], "PERSON")],
        ));
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("synthetic.jsonl");
    let cleaned = dir.path().join("clean.jsonl");
    let report_path = dir.path().join("drops.json");
    factaug::corpus::write_samples(&corpus, &input).map_err(|e| e.to_string())?;
    let path = |p: &PathBuf| p.to_str().unwrap().to_string();
    run_ok(&[
        "preprocess",
        "--input",
        &path(&input),
        "--output",
        &path(&cleaned),
        "--report",
        &path(&report_path),
    ])?;
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let removals = report["removals"].as_array().ok_or("report has no removals")?;
    let mut boiler = Vec::new();
    let mut unsupported = Vec::new();
    for r in removals {
        let item = (
            r["id"].as_str().unwrap_or_default().to_string(),
            r["sentence"].as_str().unwrap_or_default().to_string(),
            r["reason"].as_str().unwrap_or_default().to_string(),
        );
        match r["kind"].as_str() {
            Some("boilerplate") => boiler.push(item),
            Some("unsupported_entity") => unsupported.push(item),
            other => return Err(format!("unexpected removal kind {other:?}")),
        }
    }
    let want_boiler: Vec<_> = PLANTED_BOILERPLATE
        .iter()
        .enumerate()
        .map(|(i, bp)| (format!("syn-{i}"), bp.to_string(), "boilerplate".to_string()))
        .collect();
    ensure(boiler == want_boiler, || format!("boilerplate removals {boiler:?}"))?;
    ensure(unsupported == planted_unsupported, || {
        format!("entity removals {unsupported:?}")
    })?;
    ensure(report["kept"] == 10 && report["dropped"] == 0, || {
        "unexpected drops".to_string()
    })?;

    let kept = read_corpus(&cleaned, true)
        .map_err(|e| format!("cleaned corpus invalid: {e}"))?
        .samples;
    ensure(
        kept.iter()
            .all(|s| !s.document.to_lowercase().contains("this link") && !s.document.contains("Messenger")),
        || "boilerplate survived".to_string(),
    )?;

    let cleaner = FilterConfig::default().compile().map_err(|e| e.to_string())?;
    for s in corpus.iter().chain(&mini_corpus()) {
        let once = cleaner.strip_boilerplate(s).sample;
        let twice = cleaner.strip_boilerplate(&once);
        ensure(twice.sample == once && twice.removed.is_empty(), || {
            format!("{}: not idempotent", s.id)
        })?;
    }
    let again = dir.path().join("again.jsonl");
    let again_report = dir.path().join("again.json");
    run_ok(&[
        "preprocess",
        "--input",
        &path(&cleaned),
        "--output",
        &path(&again),
        "--report",
        &path(&again_report),
    ])?;
    let second: Value = serde_json::from_str(&std::fs::read_to_string(&again_report).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(second["removals"].as_array().is_some_and(Vec::is_empty), || {
        "second preprocess pass removed more".to_string()
    })?;
    Ok(
        "10 boilerplate + 5 unsupported-entity sentences removed exactly and itemized; stripping idempotent"
            .to_string(),
    )
}

fn nli_harness() -> Outcome {
    let corpus = mini_corpus();
    let backend = LexicalBackend::default();
    let first_sentences: Vec<String> = corpus
        .iter()
        .map(|s| split_sentences(&s.document)[0].text.clone())
        .collect();
    let score = |preds: &[String], agg: Aggregation| {
        let items: Vec<EvalItem> = corpus
            .iter()
            .zip(preds)
            .map(|(s, p)| EvalItem {
                id: &s.id,
                document: &s.document,
                reference: &s.summary,
                prediction: p,
                entity_count: 0,
            })
            .collect();
        evaluate::<f64>(&items, &backend, agg).expect("lexical backend never fails")
    };

    let verbatim = score(&first_sentences, Aggregation::Strict).corpus.e2e_nli;
    ensure(verbatim == 1.0, || format!("verbatim predictions score {verbatim}"))?;
    let shuffled: Vec<String> = (0..corpus.len())
        .map(|i| first_sentences[(i + 1) % corpus.len()].clone())
        .collect();
    let shuffled_score = score(&shuffled, Aggregation::Strict).corpus.e2e_nli;
    ensure(shuffled_score < verbatim, || {
        format!("shuffled predictions score {shuffled_score}")
    })?;

    // two-sentence predictions: own + foreign, own + own, foreign + foreign
    let n = corpus.len();
    let multi: Vec<String> = (0..n)
        .map(|i| {
            let own = split_sentences(&corpus[i].document);
            let other = &first_sentences[(i + 7) % n];
            match i % 3 {
                0 => format!("{} {}", own[0].text, other),
                1 => format!(
                    "{} {}",
                    own[0].text,
                    own.get(1).map_or(own[0].text.as_str(), |t| t.text.as_str())
                ),
                _ => format!("{} {}", other, first_sentences[(i + 13) % n]),
            }
        })
        .collect();
    let strict = score(&multi, Aggregation::Strict);
    let mean = score(&multi, Aggregation::Mean);
    let mut mixed = 0;
    for (i, (s, m)) in strict.per_sample.iter().zip(&mean.per_sample).enumerate() {
        let labels: HashSet<bool> = split_sentences(&multi[i])
            .iter()
            .map(|t| {
                backend.verdict(&corpus[i].document, &t.text).label == factaug::metrics::EntailmentLabel::Entailment
            })
            .collect();
        let is_mixed = labels.len() == 2;
        mixed += usize::from(is_mixed);
        ensure((s.nli_score != m.nli_score) == is_mixed, || {
            format!("{}: strict {} mean {} mixed {is_mixed}", s.id, s.nli_score, m.nli_score)
        })?;
    }
    ensure(mixed > 0, || "no mixed-verdict summaries in the probe set".to_string())?;
    Ok(format!(
        "verbatim 1.0, shuffled {shuffled_score:.2}; strict and mean differ on exactly the {mixed} mixed-verdict summaries"
    ))
}

fn control_codes(graph: &SynsetGraph) -> Outcome {
    let corpus = mini_corpus();
    let index = EntityIndex::build(&corpus, "mini");
    let docs: HashMap<&str, &str> = corpus.iter().map(|s| (s.id.as_str(), s.document.as_str())).collect();
    let mut checked = 0;
    let mut check = |p: &AugmentedPair| -> Result<(), String> {
        let code = match p.transform {
            Transform::Original => "generate a summary: ",
            Transform::Er | Transform::CatEr => "generate a wrong summary: ",
            Transform::WnHyper => "generate a general summary: ",
        };
        let doc = docs[p.id.split("::").next().unwrap()];
        checked += 1;
        ensure(p.input == format!("{code}{doc}"), || {
            format!("{}: input starts {:?}", p.id, &p.input[..30])
        })
    };
    for strategy in [Strategy::Er, Strategy::CatEr, Strategy::WnHyper] {
        for p in &run_strategy(&corpus, strategy, &index, graph, 1)?.pairs {
            check(p)?;
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("er.jsonl");
    run_ok(&[
        "augment",
        "--input",
        root().join("data/mini_corpus.jsonl").to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--strategy",
        "er",
    ])?;
    for p in factaug::corpus::read_pairs(&out).map_err(|e| e.to_string())? {
        check(&p)?;
    }
    Ok(format!("{checked} pairs carry the exact control-code prefix"))
}

const FIRST: [&str; 12] = [
    "Alice", "Ben", "Cara", "Dev", "Eve", "Finn", "Gail", "Hugo", "Iris", "Jack", "Kemi", "Liam",
];
const LAST: [&str; 10] = [
    "Moore", "Hart", "Lane", "Patel", "Stone", "Ng", "Okafor", "Price", "Quinn", "Reyes",
];
const PLACES: [&str; 12] = [
    "Leeds", "York", "Bath", "Derby", "Hull", "Cardiff", "Dundee", "Exeter", "Bristol", "Oxford", "Perth", "Wells",
];
const ORGS: [&str; 6] = ["Network Rail", "the BBC", "Oxfam", "Tesco", "Unison", "Arriva"];
const NOUNS: [&str; 12] = [
    "bus", "lorry", "driver", "school", "bridge", "hospital", "engine", "teacher", "farmer", "river", "church",
    "factory",
];

fn synthetic_corpus(n: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    (0..n)
        .map(|i| {
            let person = format!("{} {}", FIRST.choose(&mut rng).unwrap(), LAST.choose(&mut rng).unwrap());
            let place = *PLACES.choose(&mut rng).unwrap();
            let org = *ORGS.choose(&mut rng).unwrap();
            let (a, b) = (NOUNS.choose(&mut rng).unwrap(), NOUNS.choose(&mut rng).unwrap());
            let count = rng.gen_range(2..500);
            let document = format!(
                "{person} said the {a} near {place} was damaged by a {b} on Monday. {org} said {count} people were affected and repairs would take weeks."
            );
            let summary = format!("{person} said a {b} damaged the {a} near {place}, affecting {count} people.");
            annotated(
                format!("synth-{i:05}"),
                document,
                summary,
                &[(&person, "PERSON"), (place, "GPE"), (org, "ORG"), (&count.to_string(), "CARDINAL")],
            )
        })
        .collect()
}

fn throughput(graph: &SynsetGraph) -> Outcome {
    let corpus = synthetic_corpus(10_000);
    let index = EntityIndex::build(&corpus, "synthetic");
    let mut parts = Vec::new();
    for strategy in [Strategy::Er, Strategy::CatEr, Strategy::WnHyper] {
        let t0 = Instant::now();
        let out = run_strategy(&corpus, strategy, &index, graph, 1)?;
        let elapsed = t0.elapsed();
        within(elapsed, 60).map_err(|e| format!("{strategy}: {e}"))?;
        ensure(out.report.transformed == 10_000, || {
            format!("{strategy}: {} skipped", out.report.skipped)
        })?;
        parts.push(format!("{strategy} {:.2}s", elapsed.as_secs_f64()));
    }
    Ok(format!("10000 samples on one worker: {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let graph = match SynsetGraph::load_dir(&wordnet_dir()) {
        Ok(g) => Ok(g),
        Err(e) => Err(format!("WordNet load failed: {e}")),
    };
    let load_time = t0.elapsed();
    let with_graph = |f: &dyn Fn(&SynsetGraph) -> Outcome| graph.as_ref().map_err(Clone::clone).and_then(f);

    let results: Vec<(&str, Outcome)> = vec![
        ("non-reproducibility statement", non_reproducibility()),
        ("ROUGE oracle equivalence", rouge_oracle()),
        ("WordNet integrity", with_graph(&|g| wordnet_integrity(g, load_time))),
        ("augmentation invariants", with_graph(&augmentation_invariants)),
        ("determinism", with_graph(&determinism)),
        ("preprocessing", preprocessing()),
        ("E2E NLI harness", nli_harness()),
        ("control-code contract", with_graph(&control_codes)),
        ("throughput", with_graph(&throughput)),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
