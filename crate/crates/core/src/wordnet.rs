//! Reader for the WordNet (WNDB) noun database and first-sense hypernym lookup.
//!
//! Only `index.noun` and `data.noun` are read. Multiword lemmas are stored
//! with underscores turned into spaces.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Byte offset of a synset record in `data.noun`; doubles as its id.
pub type SynsetOffset = u64;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: io::Error,
    },
    #[error("{file}:{line}: unparseable record: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("synset {from:08} has hypernym pointer to missing synset {to:08}")]
    DanglingHypernym { from: SynsetOffset, to: SynsetOffset },
    #[error("index entry {lemma:?} points at missing synset {offset:08}")]
    DanglingSense { lemma: String, offset: SynsetOffset },
    #[error("hypernym cycle through synset {0:08}")]
    Cycle(SynsetOffset),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub lemmas: Vec<String>,
    /// `@` and `@i` pointer targets, in record order.
    pub hypernyms: Vec<SynsetOffset>,
}

/// Parsed noun hypernym graph. Immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct SynsetGraph {
    synsets: HashMap<SynsetOffset, Synset>,
    lemma_index: HashMap<String, Vec<SynsetOffset>>,
}

fn normalize_lemma(raw: &str) -> String {
    raw.replace('_', " ")
}

fn parse_err(file: &str, line: usize, reason: impl Into<String>) -> WordNetError {
    WordNetError::Parse {
        file: file.to_string(),
        line,
        reason: reason.into(),
    }
}

/// Header lines in WNDB files start with two spaces.
fn is_license_line(line: &str) -> bool {
    line.starts_with("  ")
}

fn parse_data_line(line: &str, file: &str, line_no: usize) -> Result<(SynsetOffset, Synset), WordNetError> {
    let body = line.split_once(" |").map_or(line, |(b, _)| b);
    let mut fields = body.split_ascii_whitespace();
    let mut next = |what: &str| {
        fields
            .next()
            .ok_or_else(|| parse_err(file, line_no, format!("missing {what}")))
    };

    let offset: SynsetOffset = next("synset offset")?
        .parse()
        .map_err(|_| parse_err(file, line_no, "bad synset offset"))?;
    next("lex_filenum")?;
    let ss_type = next("ss_type")?;
    if ss_type != "n" {
        return Err(parse_err(file, line_no, format!("ss_type {ss_type:?} is not a noun")));
    }
    let w_cnt = usize::from_str_radix(next("w_cnt")?, 16).map_err(|_| parse_err(file, line_no, "bad w_cnt"))?;
    if w_cnt == 0 {
        return Err(parse_err(file, line_no, "synset without lemmas"));
    }
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        lemmas.push(normalize_lemma(next("word")?));
        next("lex_id")?;
    }
    let p_cnt: usize = next("p_cnt")?
        .parse()
        .map_err(|_| parse_err(file, line_no, "bad p_cnt"))?;
    let mut hypernyms = Vec::new();
    for _ in 0..p_cnt {
        let symbol = next("pointer symbol")?;
        let target = next("pointer offset")?;
        let pos = next("pointer pos")?;
        next("pointer source/target")?;
        if matches!(symbol, "@" | "@i") {
            if pos != "n" {
                return Err(parse_err(file, line_no, "hypernym pointer to a non-noun"));
            }
            hypernyms.push(
                target
                    .parse()
                    .map_err(|_| parse_err(file, line_no, "bad pointer offset"))?,
            );
        }
    }
    Ok((offset, Synset { lemmas, hypernyms }))
}

fn parse_index_line(line: &str, file: &str, line_no: usize) -> Result<(String, Vec<SynsetOffset>), WordNetError> {
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    let field = |i: usize| {
        fields
            .get(i)
            .copied()
            .ok_or_else(|| parse_err(file, line_no, "record too short"))
    };
    let lemma = normalize_lemma(field(0)?);
    if field(1)? != "n" {
        return Err(parse_err(file, line_no, "pos is not n"));
    }
    let synset_cnt: usize = field(2)?
        .parse()
        .map_err(|_| parse_err(file, line_no, "bad synset_cnt"))?;
    let p_cnt: usize = field(3)?.parse().map_err(|_| parse_err(file, line_no, "bad p_cnt"))?;
    // lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt offsets...
    let first_offset = 4 + p_cnt + 2;
    if fields.len() != first_offset + synset_cnt {
        return Err(parse_err(
            file,
            line_no,
            format!(
                "expected {synset_cnt} synset offsets, found {}",
                fields.len().saturating_sub(first_offset)
            ),
        ));
    }
    let offsets = fields[first_offset..]
        .iter()
        .map(|f| f.parse().map_err(|_| parse_err(file, line_no, "bad synset offset")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((lemma, offsets))
}

impl SynsetGraph {
    /// Loads `index.noun` and `data.noun` and checks the graph invariants.
    pub fn load(index_path: &Path, data_path: &Path) -> Result<Self, WordNetError> {
        let open = |p: &Path| {
            File::open(p).map(BufReader::new).map_err(|source| WordNetError::Io {
                file: p.display().to_string(),
                source,
            })
        };
        Self::from_readers(
            open(index_path)?,
            &index_path.display().to_string(),
            open(data_path)?,
            &data_path.display().to_string(),
        )
    }

    /// Loads `index.noun` and `data.noun` from a WordNet `dict` directory.
    pub fn load_dir(dir: &Path) -> Result<Self, WordNetError> {
        let (index, data) = noun_files(dir);
        Self::load(&index, &data)
    }

    pub fn from_readers(
        index: impl BufRead,
        index_name: &str,
        data: impl BufRead,
        data_name: &str,
    ) -> Result<Self, WordNetError> {
        let mut synsets = HashMap::new();
        for (i, line) in data.lines().enumerate() {
            let line = line.map_err(|source| WordNetError::Io {
                file: data_name.to_string(),
                source,
            })?;
            if line.trim().is_empty() || is_license_line(&line) {
                continue;
            }
            let (offset, synset) = parse_data_line(&line, data_name, i + 1)?;
            synsets.insert(offset, synset);
        }

        let mut lemma_index = HashMap::new();
        for (i, line) in index.lines().enumerate() {
            let line = line.map_err(|source| WordNetError::Io {
                file: index_name.to_string(),
                source,
            })?;
            if line.trim().is_empty() || is_license_line(&line) {
                continue;
            }
            let (lemma, offsets) = parse_index_line(&line, index_name, i + 1)?;
            lemma_index.insert(lemma, offsets);
        }

        let graph = SynsetGraph { synsets, lemma_index };
        graph.check_references()?;
        graph.topological_order()?;
        Ok(graph)
    }

    fn check_references(&self) -> Result<(), WordNetError> {
        for (&from, synset) in &self.synsets {
            if let Some(&to) = synset.hypernyms.iter().find(|o| !self.synsets.contains_key(o)) {
                return Err(WordNetError::DanglingHypernym { from, to });
            }
        }
        for (lemma, offsets) in &self.lemma_index {
            if let Some(&offset) = offsets.iter().find(|o| !self.synsets.contains_key(o)) {
                return Err(WordNetError::DanglingSense {
                    lemma: lemma.clone(),
                    offset,
                });
            }
        }
        Ok(())
    }

    /// Orders synsets so that every synset precedes its hypernyms (Kahn's
    /// algorithm). Fails if the hypernym relation has a cycle.
    pub fn topological_order(&self) -> Result<Vec<SynsetOffset>, WordNetError> {
        let mut indegree: HashMap<SynsetOffset, usize> = self.synsets.keys().map(|&k| (k, 0)).collect();
        for synset in self.synsets.values() {
            for h in &synset.hypernyms {
                if let Some(d) = indegree.get_mut(h) {
                    *d += 1;
                }
            }
        }
        let mut roots: Vec<SynsetOffset> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
        roots.sort_unstable();
        let mut queue: VecDeque<SynsetOffset> = roots.into();
        let mut order = Vec::with_capacity(self.synsets.len());
        while let Some(node) = queue.pop_front() {
            order.push(node);
            for h in &self.synsets[&node].hypernyms {
                let d = indegree.get_mut(h).expect("references checked");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(*h);
                }
            }
        }
        if order.len() != self.synsets.len() {
            let stuck = indegree
                .iter()
                .filter(|(_, &d)| d > 0)
                .map(|(&k, _)| k)
                .min()
                .expect("some node is on a cycle");
            return Err(WordNetError::Cycle(stuck));
        }
        Ok(order)
    }

    pub fn synset_count(&self) -> usize {
        self.synsets.len()
    }

    pub fn lemma_count(&self) -> usize {
        self.lemma_index.len()
    }

    pub fn synset(&self, offset: SynsetOffset) -> Option<&Synset> {
        self.synsets.get(&offset)
    }

    pub fn synsets(&self) -> impl Iterator<Item = (SynsetOffset, &Synset)> {
        self.synsets.iter().map(|(&k, v)| (k, v))
    }

    /// Index lemmas, lowercase with spaces for multiword entries.
    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemma_index.keys().map(String::as_str)
    }

    /// Sense-ordered synsets for a lemma (case-insensitive).
    pub fn senses(&self, lemma: &str) -> &[SynsetOffset] {
        self.lemma_index.get(&lemma.to_lowercase()).map_or(&[], Vec::as_slice)
    }

    pub fn first_sense(&self, lemma: &str) -> Option<SynsetOffset> {
        self.senses(lemma).first().copied()
    }

    /// First hypernym synset of the lemma's most frequent sense.
    pub fn hypernym_synset(&self, lemma: &str) -> Option<SynsetOffset> {
        let sense = self.first_sense(lemma)?;
        self.synsets[&sense].hypernyms.first().copied()
    }

    /// First lemma of the first hypernym of the lemma's first sense.
    /// `None` for unknown lemmas and for root synsets such as "entity".
    pub fn hypernym_of(&self, lemma: &str) -> Option<&str> {
        let hyper = self.hypernym_synset(lemma)?;
        self.synsets[&hyper].lemmas.first().map(String::as_str)
    }

    /// True iff the lowercased token is an index lemma.
    pub fn is_noun(&self, token: &str) -> bool {
        !token.is_empty() && self.lemma_index.contains_key(&token.to_lowercase())
    }

    /// Whether `ancestor` is reachable from `node` through one or more
    /// hypernym edges.
    pub fn is_strict_ancestor(&self, node: SynsetOffset, ancestor: SynsetOffset) -> bool {
        let mut stack: Vec<SynsetOffset> = self.synset(node).map(|s| s.hypernyms.clone()).unwrap_or_default();
        let mut seen = std::collections::HashSet::new();
        while let Some(cur) = stack.pop() {
            if cur == ancestor {
                return true;
            }
            if seen.insert(cur) {
                stack.extend(self.synsets[&cur].hypernyms.iter().copied());
            }
        }
        false
    }

    /// Index lemmas missing from one of their listed synsets (compared
    /// case-insensitively). Empty for a consistent database.
    pub fn lemma_mismatches(&self) -> Vec<(String, SynsetOffset)> {
        let mut out = Vec::new();
        for (lemma, offsets) in &self.lemma_index {
            for &o in offsets {
                if !self.synsets[&o].lemmas.iter().any(|l| l.to_lowercase() == *lemma) {
                    out.push((lemma.clone(), o));
                }
            }
        }
        out.sort();
        out
    }
}

/// Paths of `index.noun` and `data.noun` inside a WordNet `dict` directory.
pub fn noun_files(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("index.noun"), dir.join("data.noun"))
}
