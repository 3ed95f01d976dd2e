//! Data model and JSONL ingestion/emission shared by every pipeline stage.
//!
//! All spans are character offsets (not byte offsets) into their host text,
//! which is what common NER exporters produce.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// A typed span inside a document or summary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub category: String,
}

/// Character span marked as a noun token in a summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NounToken {
    pub start: usize,
    pub end: usize,
}

/// One document/summary pair with its annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub document: String,
    pub summary: String,
    #[serde(default)]
    pub document_entities: Vec<EntityMention>,
    #[serde(default)]
    pub summary_entities: Vec<EntityMention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_noun_tokens: Option<Vec<NounToken>>,
    /// Fields this crate does not interpret; carried through cleaning stages.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Sample {
    pub fn new(id: impl Into<String>, document: impl Into<String>, summary: impl Into<String>) -> Self {
        Sample {
            id: id.into(),
            document: document.into(),
            summary: summary.into(),
            document_entities: Vec::new(),
            summary_entities: Vec::new(),
            summary_noun_tokens: None,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Transform {
    Original,
    Er,
    CatEr,
    WnHyper,
}

impl Transform {
    /// Suffix appended to the source sample id.
    pub fn id_suffix(self) -> &'static str {
        match self {
            Transform::Original => "original",
            Transform::Er => "er",
            Transform::CatEr => "cat_er",
            Transform::WnHyper => "wn_hyper",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Original => "ORIGINAL",
            Transform::Er => "ER",
            Transform::CatEr => "CAT_ER",
            Transform::WnHyper => "WN_HYPER",
        })
    }
}

/// One replacement applied to a summary. `start` is the character offset of
/// `repl` in the emitted target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub orig: String,
    pub repl: String,
    pub start: usize,
}

/// A training pair: control-code-prefixed input and its target summary.
///
/// Serialized with a fixed key order (`id, input, target, transform,
/// provenance`) so equal values always produce identical bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedPair {
    pub id: String,
    pub input: String,
    pub target: String,
    pub transform: Transform,
    pub provenance: Vec<Provenance>,
}

pub fn pair_id(sample_id: &str, transform: Transform) -> String {
    format!("{sample_id}::{}", transform.id_suffix())
}

/// A single broken invariant, rendered as `field: rule`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {}", join_violations(.violations))]
    Invalid { line: usize, violations: Vec<Violation> },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Json { line, .. }
            | CorpusError::Invalid { line, .. }
            | CorpusError::DuplicateId { line, .. } => Some(*line),
            CorpusError::Io { .. } => None,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Substring by character offsets `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

fn check_mentions(field: &str, host: &str, mentions: &[EntityMention], out: &mut Vec<Violation>) {
    let len = char_len(host);
    for (i, m) in mentions.iter().enumerate() {
        let name = format!("{field}[{i}]");
        if m.start >= m.end || m.end > len {
            out.push(Violation::new(name, "span out of bounds"));
            continue;
        }
        if char_slice(host, m.start, m.end) != Some(m.text.as_str()) {
            out.push(Violation::new(name, "text/span mismatch"));
        }
    }
    for i in 1..mentions.len() {
        let (prev, cur) = (&mentions[i - 1], &mentions[i]);
        if cur.start < prev.start {
            out.push(Violation::new(field, format!("not sorted at index {i}")));
        } else if cur.start < prev.end {
            out.push(Violation::new(field, format!("overlap at index {i}")));
        }
    }
}

/// Checks every type invariant of `s`; an empty result means the sample is valid.
pub fn validate_sample(s: &Sample) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.id.is_empty() {
        out.push(Violation::new("id", "empty"));
    }
    check_mentions("document_entities", &s.document, &s.document_entities, &mut out);
    check_mentions("summary_entities", &s.summary, &s.summary_entities, &mut out);
    if let Some(nouns) = &s.summary_noun_tokens {
        let len = char_len(&s.summary);
        for (i, t) in nouns.iter().enumerate() {
            if t.start >= t.end || t.end > len {
                out.push(Violation::new(
                    format!("summary_noun_tokens[{i}]"),
                    "span out of bounds",
                ));
            }
        }
    }
    out
}

/// Streaming JSONL reader yielding validated samples in file order.
///
/// In strict mode the first failure is yielded as an error and iteration
/// ends. Otherwise failing lines are skipped and counted.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    strict: bool,
    seen: HashSet<String>,
    skipped: Vec<CorpusError>,
    done: bool,
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: &Path, strict: bool) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(CorpusReader::new(BufReader::new(file), strict))
    }
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, strict: bool) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            strict,
            seen: HashSet::new(),
            skipped: Vec::new(),
            done: false,
        }
    }

    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }

    /// Errors for lines skipped in lenient mode.
    pub fn skipped(&self) -> &[CorpusError] {
        &self.skipped
    }

    fn parse_line(&mut self, line: &str) -> Result<Sample, CorpusError> {
        let line_no = self.line_no;
        let sample: Sample =
            serde_json::from_str(line).map_err(|source| CorpusError::Json { line: line_no, source })?;
        let violations = validate_sample(&sample);
        if !violations.is_empty() {
            return Err(CorpusError::Invalid {
                line: line_no,
                violations,
            });
        }
        if !self.seen.insert(sample.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: sample.id,
            });
        }
        Ok(sample)
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Sample, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    self.done = true;
                    return Some(Err(CorpusError::Io {
                        path: format!("line {}", self.line_no + 1),
                        source,
                    }));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match self.parse_line(&line) {
                Ok(sample) => return Some(Ok(sample)),
                Err(e) if self.strict => {
                    self.done = true;
                    return Some(Err(e));
                }
                Err(e) => self.skipped.push(e),
            }
        }
        None
    }
}

/// Result of reading a whole corpus into memory.
#[derive(Debug)]
pub struct ReadOutcome {
    pub samples: Vec<Sample>,
    pub skipped: Vec<CorpusError>,
}

/// Reads the whole file; in strict mode the first failure is returned as `Err`.
pub fn read_corpus(path: &Path, strict: bool) -> Result<ReadOutcome, CorpusError> {
    let mut reader = CorpusReader::open(path, strict)?;
    let samples = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok(ReadOutcome {
        samples,
        skipped: reader.skipped,
    })
}

fn write_jsonl<T: Serialize, W: Write>(items: impl IntoIterator<Item = T>, mut w: W) -> io::Result<usize> {
    let mut n = 0;
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn write_pairs_to<'a, W: Write>(pairs: impl IntoIterator<Item = &'a AugmentedPair>, w: W) -> io::Result<usize> {
    write_jsonl(pairs, w)
}

/// Writes one pair per line and returns the number of lines written.
pub fn write_pairs<'a>(pairs: impl IntoIterator<Item = &'a AugmentedPair>, path: &Path) -> Result<usize, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_pairs_to(pairs, BufWriter::new(file)).map_err(io_err)
}

pub fn write_samples<'a>(samples: impl IntoIterator<Item = &'a Sample>, path: &Path) -> Result<usize, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_jsonl(samples, BufWriter::new(file)).map_err(io_err)
}

pub fn read_pairs(path: &Path) -> Result<Vec<AugmentedPair>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?);
    }
    Ok(out)
}
