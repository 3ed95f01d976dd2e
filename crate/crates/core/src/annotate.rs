//! Fallback annotation: tokenizer, capitalization/gazetteer entity tagger and
//! the noun selector used by hypernym replacement.
//!
//! Tokenization rules, applied left to right:
//! - dotted abbreviations of single letters (`U.S.`, `e.g.`) are one token,
//!   trailing period included;
//! - digit runs joined by `,` or `.` followed by a digit (`150,000`, `3.5`);
//! - alphanumeric runs, joined across a single inner `'`, `’` or `-`
//!   (`don't`, `steam-engine`);
//! - any other non-whitespace character is a token of its own.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{char_slice, EntityMention, Sample};
use crate::wordnet::SynsetGraph;

/// A character span into a host text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Bundled English stopword list.
pub const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "else",
    "ever",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "might",
    "more",
    "most",
    "must",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "ought",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "shall",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "upon",
    "us",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "whose",
    "why",
    "will",
    "with",
    "within",
    "without",
    "would",
    "yet",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "said",
    "says",
    "say",
    "get",
    "got",
    "per",
    "via",
    "although",
    "though",
    "since",
    "unless",
    "whether",
    "onto",
];

pub fn is_stopword(lowercase: &str) -> bool {
    STOPWORDS.contains(&lowercase)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-')
}

fn abbreviation_len(chars: &[char], i: usize) -> usize {
    let mut j = i;
    while j + 1 < chars.len() && chars[j].is_alphabetic() && chars[j + 1] == '.' {
        j += 2;
    }
    let letters = (j - i) / 2;
    if letters >= 2 && !chars.get(j).is_some_and(|c| c.is_alphanumeric()) {
        j - i
    } else {
        0
    }
}

pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let abbr = abbreviation_len(&chars, i);
        if abbr > 0 {
            i += abbr;
        } else if c.is_ascii_digit() {
            while i < chars.len() {
                if chars[i].is_alphanumeric() {
                    i += 1;
                } else if matches!(chars[i], ',' | '.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                    i += 2;
                } else {
                    break;
                }
            }
        } else if c.is_alphanumeric() {
            while i < chars.len() {
                if chars[i].is_alphanumeric() {
                    i += 1;
                } else if is_joiner(chars[i]) && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()) {
                    i += 2;
                } else {
                    break;
                }
            }
        } else {
            i += 1;
        }
        out.push(TokenSpan {
            start,
            end: i,
            text: chars[start..i].iter().collect(),
        });
    }
    out
}

/// Category → known surface terms. Terms may span several tokens.
#[derive(Debug, Clone, Default)]
pub struct Gazetteers {
    by_category: BTreeMap<String, HashSet<String>>,
    max_terms_tokens: usize,
}

impl Gazetteers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, category: &str, term: &str) {
        let term = term.trim();
        if term.is_empty() {
            return;
        }
        self.max_terms_tokens = self.max_terms_tokens.max(tokenize(term).len());
        self.by_category
            .entry(category.to_string())
            .or_default()
            .insert(term.to_string());
    }

    /// Loads one term per line for `category`; blank lines and `#` comments are ignored.
    pub fn load_file(&mut self, category: &str, path: &Path) -> io::Result<()> {
        for line in fs::read_to_string(path)?.lines() {
            if !line.trim_start().starts_with('#') {
                self.insert(category, line);
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.by_category.is_empty()
    }

    /// Category of an exact term; the alphabetically first category wins ties.
    pub fn category_of(&self, term: &str) -> Option<&str> {
        self.by_category
            .iter()
            .find(|(_, terms)| terms.contains(term))
            .map(|(c, _)| c.as_str())
    }
}

impl<C: AsRef<str>, T: AsRef<str>> FromIterator<(C, T)> for Gazetteers {
    fn from_iter<I: IntoIterator<Item = (C, T)>>(iter: I) -> Self {
        let mut g = Gazetteers::new();
        for (c, t) in iter {
            g.insert(c.as_ref(), t.as_ref());
        }
        g
    }
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

fn is_sentence_end(token: &str) -> bool {
    matches!(token, "." | "!" | "?")
}

fn mention(text: &str, tokens: &[TokenSpan], category: &str) -> EntityMention {
    let (start, end) = (tokens[0].start, tokens[tokens.len() - 1].end);
    EntityMention {
        start,
        end,
        text: char_slice(text, start, end)
            .expect("token spans lie inside text")
            .to_string(),
        category: category.to_string(),
    }
}

/// Tags entities with gazetteer lookups and capitalization.
///
/// Gazetteer terms match anywhere (longest match first). Remaining maximal
/// runs of capitalized tokens become `MISC`, except that a run's
/// sentence-initial token is dropped. Tokens starting with a digit are
/// `CARDINAL`.
pub fn heuristic_entities(text: &str, gazetteers: &Gazetteers) -> Vec<EntityMention> {
    let tokens = tokenize(text);
    let sentence_start: Vec<bool> = (0..tokens.len())
        .map(|i| i == 0 || is_sentence_end(&tokens[i - 1].text))
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=gazetteers.max_terms_tokens.min(tokens.len() - i))
            .rev()
            .find_map(|n| {
                let span = &tokens[i..i + n];
                let surface = char_slice(text, span[0].start, span[n - 1].end)?;
                gazetteers.category_of(surface).map(|c| (n, c))
            });
        if let Some((n, category)) = longest {
            out.push(mention(text, &tokens[i..i + n], category));
            i += n;
            continue;
        }
        let tok = &tokens[i].text;
        if tok.starts_with(|c: char| c.is_ascii_digit()) {
            out.push(mention(text, &tokens[i..=i], "CARDINAL"));
            i += 1;
            continue;
        }
        if is_capitalized(tok) {
            let mut j = i + 1;
            while j < tokens.len() && is_capitalized(&tokens[j].text) && gazetteer_free(text, &tokens[j..], gazetteers)
            {
                j += 1;
            }
            let from = if sentence_start[i] { i + 1 } else { i };
            if from < j {
                out.push(mention(text, &tokens[from..j], "MISC"));
            }
            i = j;
            continue;
        }
        i += 1;
    }
    out
}

/// True when no gazetteer term starts at the head of `rest`.
fn gazetteer_free(text: &str, rest: &[TokenSpan], gazetteers: &Gazetteers) -> bool {
    (1..=gazetteers.max_terms_tokens.min(rest.len()))
        .all(|n| char_slice(text, rest[0].start, rest[n - 1].end).is_none_or(|s| gazetteers.category_of(s).is_none()))
}

/// Fills in entity annotations the sample lacks; existing annotations win.
pub fn annotate_missing(s: &mut Sample, gazetteers: &Gazetteers) {
    if s.document_entities.is_empty() {
        s.document_entities = heuristic_entities(&s.document, gazetteers);
    }
    if s.summary_entities.is_empty() {
        s.summary_entities = heuristic_entities(&s.summary, gazetteers);
    }
}

fn inside_any(span: (usize, usize), entities: &[EntityMention]) -> bool {
    entities.iter().any(|e| span.0 < e.end && e.start < span.1)
}

/// Summary noun tokens eligible for hypernym replacement.
///
/// With annotated `summary_noun_tokens`, keeps those whose lowercased text is
/// a WordNet noun. Otherwise picks lowercase tokens that are WordNet nouns,
/// are not stopwords and lie outside every summary entity.
pub fn select_nouns(s: &Sample, g: &SynsetGraph) -> Vec<TokenSpan> {
    let spans: Vec<TokenSpan> = match &s.summary_noun_tokens {
        Some(nouns) => nouns
            .iter()
            .filter_map(|t| {
                char_slice(&s.summary, t.start, t.end).map(|text| TokenSpan {
                    start: t.start,
                    end: t.end,
                    text: text.to_string(),
                })
            })
            .filter(|t| g.is_noun(&t.text))
            .collect(),
        None => tokenize(&s.summary)
            .into_iter()
            .filter(|t| {
                t.text.chars().all(|c| !c.is_uppercase())
                    && t.text.chars().any(char::is_alphabetic)
                    && !is_stopword(&t.text)
                    && g.is_noun(&t.text)
            })
            .collect(),
    };
    spans
        .into_iter()
        .filter(|t| !inside_any((t.start, t.end), &s.summary_entities))
        .collect()
}
