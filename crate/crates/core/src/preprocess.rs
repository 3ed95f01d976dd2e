//! Corpus cleaning: rule-based sentence splitting, boilerplate sentence
//! removal from documents and the summary entity-support filter.

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::TokenSpan;
use crate::corpus::{EntityMention, NounToken, Sample};

/// Tokens (lowercased, without the trailing period) that do not end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "gen", "gov", "sen", "rep", "lt", "col", "capt",
    "sgt", "rev", "hon", "inc", "ltd", "co", "corp", "vs", "etc", "no", "jan", "feb", "mar", "apr", "jun", "jul",
    "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k", "e.g", "i.e", "a.m", "p.m", "u.n", "d.c",
];

/// Literal patterns removed by default.
pub const DEFAULT_BOILERPLATE: &[&str] = &[
    "Share this with Email, Facebook, Messenger",
    "Share this with Email, Facebook, Messenger, Twitter, Pinterest, WhatsApp, LinkedIn",
    "Copy this link",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']')
}

fn ends_with_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut start = dot;
    while start > 0 && (chars[start - 1].is_alphanumeric() || chars[start - 1] == '.') {
        start -= 1;
    }
    let word: String = chars[start..dot].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Splits on `.`, `?` or `!` (plus any closing quotes or brackets) followed
/// by whitespace and an uppercase letter or a quote, or by the end of text.
/// Sentence spans are trimmed, so together they cover every non-whitespace
/// character.
pub fn split_sentences(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !is_terminator(chars[i]) {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while end < chars.len() && (is_terminator(chars[end]) || is_closer(chars[end])) {
            end += 1;
        }
        let mut next = end;
        while next < chars.len() && chars[next].is_whitespace() {
            next += 1;
        }
        let boundary = if next == chars.len() {
            true
        } else {
            next > end
                && (chars[next].is_uppercase() || matches!(chars[next], '"' | '“' | '‘' | '\''))
                && !(chars[i] == '.' && ends_with_abbreviation(&chars, i))
        };
        if boundary {
            bounds.push((start, end));
            start = next;
        }
        i = end.max(i + 1);
    }
    if start < chars.len() {
        bounds.push((start, chars.len()));
    }
    bounds
        .into_iter()
        .filter_map(|(s, e)| {
            let mut s = s;
            let mut e = e;
            while s < e && chars[s].is_whitespace() {
                s += 1;
            }
            while e > s && chars[e - 1].is_whitespace() {
                e -= 1;
            }
            (s < e).then(|| TokenSpan {
                start: s,
                end: e,
                text: chars[s..e].iter().collect(),
            })
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("invalid regular expression {pattern:?}: {source}")]
    Regex {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("boilerplate removal is enabled but no patterns are configured")]
    NoPatterns,
}

/// A boilerplate pattern. Written as plain text for a literal substring, or
/// with a `re:` prefix for a regular expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Pattern {
    Literal(String),
    Regex(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> Pattern {
        match raw.strip_prefix("re:") {
            Some(re) => Pattern::Regex(re.to_string()),
            None => Pattern::Literal(raw.to_string()),
        }
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> String {
        match p {
            Pattern::Literal(s) => s,
            Pattern::Regex(s) => format!("re:{s}"),
        }
    }
}

impl From<String> for Pattern {
    fn from(s: String) -> Self {
        Pattern::parse(&s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    pub boilerplate: bool,
    pub boilerplate_patterns: Vec<Pattern>,
    pub entity_filter: bool,
    pub case_sensitive: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            boilerplate: true,
            boilerplate_patterns: DEFAULT_BOILERPLATE
                .iter()
                .map(|p| Pattern::Literal(p.to_string()))
                .collect(),
            entity_filter: true,
            case_sensitive: false,
        }
    }
}

impl FilterConfig {
    /// No cleaning at all (the CNN/DailyMail setting).
    pub fn passthrough() -> Self {
        FilterConfig {
            boilerplate: false,
            boilerplate_patterns: Vec::new(),
            entity_filter: false,
            case_sensitive: false,
        }
    }

    pub fn compile(&self) -> Result<Cleaner, PatternError> {
        if self.boilerplate && self.boilerplate_patterns.is_empty() {
            return Err(PatternError::NoPatterns);
        }
        let patterns = if self.boilerplate {
            self.boilerplate_patterns
                .iter()
                .map(|p| {
                    let (src, literal) = match p {
                        Pattern::Literal(s) => (regex::escape(s), s),
                        Pattern::Regex(s) => (s.clone(), s),
                    };
                    RegexBuilder::new(&src)
                        .case_insensitive(!self.case_sensitive)
                        .build()
                        .map_err(|source| PatternError::Regex {
                            pattern: literal.clone(),
                            source,
                        })
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        Ok(Cleaner {
            patterns,
            entity_filter: self.entity_filter,
            case_sensitive: self.case_sensitive,
        })
    }
}

/// A compiled [`FilterConfig`].
#[derive(Debug, Clone)]
pub struct Cleaner {
    patterns: Vec<Regex>,
    entity_filter: bool,
    case_sensitive: bool,
}

/// Where a removal happened and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalKind {
    Boilerplate,
    UnsupportedEntity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub kind: RemovalKind,
    pub sentence: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripOutcome {
    pub sample: Sample,
    pub removed: Vec<Removal>,
    /// Nothing is left of the document; the entity filter drops such samples.
    pub empty_document: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterDecision {
    Keep { sample: Sample, removed: Vec<Removal> },
    Drop { reason: String, removed: Vec<Removal> },
}

impl FilterDecision {
    pub fn is_keep(&self) -> bool {
        matches!(self, FilterDecision::Keep { .. })
    }

    pub fn removed(&self) -> &[Removal] {
        match self {
            FilterDecision::Keep { removed, .. } | FilterDecision::Drop { removed, .. } => removed,
        }
    }
}

/// Removes the given sentences from `text`, each with the whitespace that
/// follows it (or precedes it, for a final sentence). Returns the new text and
/// the removed character ranges in ascending order.
fn remove_sentences(text: &str, drop: &[&TokenSpan]) -> (String, Vec<(usize, usize)>) {
    let chars: Vec<char> = text.chars().collect();
    let mut ranges: Vec<(usize, usize)> = drop
        .iter()
        .map(|s| {
            let mut end = s.end;
            while end < chars.len() && chars[end].is_whitespace() {
                end += 1;
            }
            let mut start = s.start;
            if end == chars.len() {
                while start > 0 && chars[start - 1].is_whitespace() {
                    start -= 1;
                }
            }
            (start, end)
        })
        .collect();
    ranges.sort_unstable();
    let mut out = String::with_capacity(text.len());
    let mut r = 0;
    for (i, &c) in chars.iter().enumerate() {
        while r < ranges.len() && ranges[r].1 <= i {
            r += 1;
        }
        if r < ranges.len() && ranges[r].0 <= i {
            continue;
        }
        out.push(c);
    }
    (out, ranges)
}

/// Maps a span through removals; `None` if it touches a removed range.
fn remap(start: usize, end: usize, removed: &[(usize, usize)]) -> Option<(usize, usize)> {
    let mut shift = 0;
    for &(a, b) in removed {
        if b <= start {
            shift += b - a;
        } else if a < end {
            return None;
        }
    }
    Some((start - shift, end - shift))
}

fn remap_mentions(mentions: &[EntityMention], removed: &[(usize, usize)]) -> Vec<EntityMention> {
    mentions
        .iter()
        .filter_map(|m| {
            remap(m.start, m.end, removed).map(|(start, end)| EntityMention {
                start,
                end,
                ..m.clone()
            })
        })
        .collect()
}

fn contains(haystack: &str, needle: &str, case_sensitive: bool) -> bool {
    if case_sensitive {
        haystack.contains(needle)
    } else {
        haystack.to_lowercase().contains(&needle.to_lowercase())
    }
}

impl Cleaner {
    fn is_boilerplate(&self, sentence: &str) -> bool {
        self.patterns.iter().any(|p| p.is_match(sentence))
    }

    /// Drops document sentences matching any boilerplate pattern. Document
    /// entities are shifted, or dropped when inside a removed sentence; the
    /// summary is untouched.
    pub fn strip_boilerplate(&self, s: &Sample) -> StripOutcome {
        let sentences = split_sentences(&s.document);
        let drop: Vec<&TokenSpan> = sentences.iter().filter(|t| self.is_boilerplate(&t.text)).collect();
        let mut sample = s.clone();
        let removed = drop
            .iter()
            .map(|t| Removal {
                kind: RemovalKind::Boilerplate,
                sentence: t.text.clone(),
                reason: "boilerplate".to_string(),
            })
            .collect();
        if !drop.is_empty() {
            let (document, ranges) = remove_sentences(&s.document, &drop);
            sample.document = document;
            sample.document_entities = remap_mentions(&s.document_entities, &ranges);
        }
        let empty_document = sample.document.trim().is_empty();
        StripOutcome {
            sample,
            removed,
            empty_document,
        }
    }

    /// Removes summary sentences holding an entity whose surface text does
    /// not occur in the document. The sample is dropped when its summary (or
    /// document) ends up empty.
    pub fn entity_faithfulness_filter(&self, s: &Sample) -> FilterDecision {
        if s.document.trim().is_empty() {
            return FilterDecision::Drop {
                reason: "empty document".to_string(),
                removed: Vec::new(),
            };
        }
        let sentences = split_sentences(&s.summary);
        let mut removed = Vec::new();
        let mut drop = Vec::new();
        for sentence in &sentences {
            let unsupported = s
                .summary_entities
                .iter()
                .filter(|m| m.start >= sentence.start && m.start < sentence.end)
                .find(|m| !contains(&s.document, &m.text, self.case_sensitive));
            if let Some(m) = unsupported {
                removed.push(Removal {
                    kind: RemovalKind::UnsupportedEntity,
                    sentence: sentence.text.clone(),
                    reason: format!("unsupported entity: {}", m.text),
                });
                drop.push(sentence);
            }
        }
        if drop.len() == sentences.len() {
            let reason = match removed.as_slice() {
                [only] => only.reason.clone(),
                [] => "empty summary".to_string(),
                _ => "empty summary after filtering".to_string(),
            };
            return FilterDecision::Drop { reason, removed };
        }
        let mut sample = s.clone();
        if !drop.is_empty() {
            let (summary, ranges) = remove_sentences(&s.summary, &drop);
            sample.summary = summary;
            sample.summary_entities = remap_mentions(&s.summary_entities, &ranges);
            sample.summary_noun_tokens = s.summary_noun_tokens.as_ref().map(|nouns| {
                nouns
                    .iter()
                    .filter_map(|t| remap(t.start, t.end, &ranges).map(|(start, end)| NounToken { start, end }))
                    .collect()
            });
        }
        FilterDecision::Keep { sample, removed }
    }

    /// Boilerplate stripping followed by the entity filter (when enabled).
    pub fn clean(&self, s: &Sample) -> FilterDecision {
        let stripped = self.strip_boilerplate(s);
        let mut removed = stripped.removed;
        if stripped.empty_document {
            return FilterDecision::Drop {
                reason: "empty document".to_string(),
                removed,
            };
        }
        if !self.entity_filter {
            return FilterDecision::Keep {
                sample: stripped.sample,
                removed,
            };
        }
        match self.entity_faithfulness_filter(&stripped.sample) {
            FilterDecision::Keep { sample, removed: more } => {
                removed.extend(more);
                FilterDecision::Keep { sample, removed }
            }
            FilterDecision::Drop { reason, removed: more } => {
                removed.extend(more);
                FilterDecision::Drop { reason, removed }
            }
        }
    }
}
