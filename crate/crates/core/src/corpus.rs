//! Corpus data model and JSONL ingestion.
//!
//! A corpus is a UTF-8 JSONL file with one paper per line. Loading validates
//! every record, normalizes author names and facet values, and freezes the
//! result into a [`CorpusSnapshot`] whose `content_hash` covers both the raw
//! input bytes and the build configuration.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::BuildConfig;
use crate::tagger::EntityType;

pub const MIN_YEAR: i32 = 1800;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: duplicate paper_id \"{paper_id}\" (first seen on line {first_line})")]
    DuplicateId {
        line: usize,
        paper_id: String,
        first_line: usize,
    },
    #[error("line {line}: year {year} outside [{MIN_YEAR}, {MAX_YEAR}]")]
    YearOutOfRange { line: usize, year: i64 },
    #[error("line {line}: entity \"{text}\" has unknown type \"{entity_type}\"")]
    UnknownEntityType {
        line: usize,
        text: String,
        entity_type: String,
    },
}

/// An author as listed on a paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRef {
    pub raw_name: String,
    pub key: String,
}

impl AuthorRef {
    /// Returns `None` when the name normalizes to an empty key.
    pub fn parse(raw_name: &str) -> Option<Self> {
        let key = normalize_author(raw_name);
        if key.is_empty() {
            return None;
        }
        Some(Self {
            raw_name: raw_name.to_string(),
            key,
        })
    }
}

/// A precomputed entity annotation supplied with the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityAnnotation {
    pub text: String,
    pub id: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
}

/// Population / intervention / outcome facet values for one paper.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetAnnotation {
    #[serde(default)]
    pub population: Vec<String>,
    #[serde(default)]
    pub intervention: Vec<String>,
    #[serde(default)]
    pub outcome: Vec<String>,
}

impl FacetAnnotation {
    /// Lowercases, trims and deduplicates each list, keeping first-seen order.
    pub fn normalized(self) -> Self {
        Self {
            population: normalize_values(self.population),
            intervention: normalize_values(self.intervention),
            outcome: normalize_values(self.outcome),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub abstract_text: String,
    pub authors: Vec<AuthorRef>,
    pub affiliations: Vec<String>,
    pub journal: Option<String>,
    pub year: i32,
    pub entities: Option<Vec<EntityAnnotation>>,
    pub facets: Option<FacetAnnotation>,
    pub topics: Option<Vec<String>>,
}

impl PaperRecord {
    /// Distinct author keys in listing order.
    pub fn author_keys(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.authors
            .iter()
            .map(|a| a.key.as_str())
            .filter(|k| seen.insert(*k))
            .collect()
    }

    /// Distinct normalized affiliations.
    pub fn affiliation_keys(&self) -> BTreeSet<String> {
        self.affiliations
            .iter()
            .map(|a| normalize_value(a))
            .filter(|a| !a.is_empty())
            .collect()
    }

    pub fn topic_list(&self) -> &[String] {
        self.topics.as_deref().unwrap_or(&[])
    }

    /// The record in the corpus input format.
    pub fn to_json_line(&self) -> String {
        let line = RawRecord {
            paper_id: Some(self.paper_id.clone()),
            title: Some(self.title.clone()),
            abstract_text: Some(self.abstract_text.clone()),
            authors: Some(self.authors.iter().map(|a| a.raw_name.clone()).collect()),
            affiliations: Some(self.affiliations.clone()),
            journal: self.journal.clone(),
            year: Some(i64::from(self.year)),
            entities: self.entities.as_ref().map(|es| {
                es.iter()
                    .map(|e| RawEntity {
                        text: e.text.clone(),
                        id: e.id.clone(),
                        entity_type: e.entity_type.as_str().to_string(),
                    })
                    .collect()
            }),
            facets: self.facets.clone(),
            topics: self.topics.clone(),
        };
        serde_json::to_string(&line).expect("record serializes")
    }
}

/// The fields shown in paper lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperSummary {
    pub paper_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub journal: Option<String>,
    pub year: i32,
    pub authors: Vec<String>,
}

impl From<&PaperRecord> for PaperSummary {
    fn from(r: &PaperRecord) -> Self {
        Self {
            paper_id: r.paper_id.clone(),
            title: r.title.clone(),
            abstract_text: r.abstract_text.clone(),
            journal: r.journal.clone(),
            year: r.year,
            authors: r.authors.iter().map(|a| a.raw_name.clone()).collect(),
        }
    }
}

/// The wire form of one corpus line, before validation.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    paper_id: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: Option<String>,
    #[serde(default)]
    authors: Option<Vec<String>>,
    #[serde(default)]
    affiliations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    journal: Option<String>,
    year: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entities: Option<Vec<RawEntity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    facets: Option<FacetAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topics: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntity {
    text: String,
    id: String,
    #[serde(rename = "type")]
    entity_type: String,
}

/// An immutable, validated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSnapshot {
    records: Vec<PaperRecord>,
    build_config: BuildConfig,
    content_hash: String,
}

impl CorpusSnapshot {
    /// Builds a snapshot from already validated records. The hash covers the
    /// records' serialized form and the config.
    pub fn from_records(records: Vec<PaperRecord>, config: BuildConfig) -> Self {
        let mut bytes = Vec::new();
        for r in &records {
            bytes.extend_from_slice(r.to_json_line().as_bytes());
            bytes.push(b'\n');
        }
        let content_hash = content_digest(&bytes, &config);
        Self {
            records,
            build_config: config,
            content_hash,
        }
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn build_config(&self) -> &BuildConfig {
        &self.build_config
    }

    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index of each paper id, for resolving ids stored in derived structures.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.paper_id.as_str(), i))
            .collect()
    }
}

fn content_digest(input: &[u8], config: &BuildConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update((input.len() as u64).to_le_bytes());
    hasher.update(input);
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    hex::encode(hasher.finalize())
}

pub fn load_corpus(path: impl AsRef<Path>, config: &BuildConfig) -> Result<CorpusSnapshot, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&bytes, config)
}

/// Parses JSONL corpus bytes. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus(bytes: &[u8], config: &BuildConfig) -> Result<CorpusSnapshot, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        CorpusError::Malformed {
            line,
            message: "invalid UTF-8".into(),
        }
    })?;

    let mut records = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(raw_line).map_err(|e| CorpusError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let record = validate(raw, line)?;
        if let Some(&first_line) = first_seen.get(&record.paper_id) {
            return Err(CorpusError::DuplicateId {
                line,
                paper_id: record.paper_id,
                first_line,
            });
        }
        first_seen.insert(record.paper_id.clone(), line);
        records.push(record);
    }

    let content_hash = content_digest(bytes, config);
    Ok(CorpusSnapshot {
        records,
        build_config: config.clone(),
        content_hash,
    })
}

fn validate(raw: RawRecord, line: usize) -> Result<PaperRecord, CorpusError> {
    let paper_id = raw.paper_id.ok_or(CorpusError::MissingField { line, field: "paper_id" })?;
    let title = raw.title.ok_or(CorpusError::MissingField { line, field: "title" })?;
    let year = raw.year.ok_or(CorpusError::MissingField { line, field: "year" })?;
    if year < i64::from(MIN_YEAR) || year > i64::from(MAX_YEAR) {
        return Err(CorpusError::YearOutOfRange { line, year });
    }

    let authors = raw
        .authors
        .unwrap_or_default()
        .iter()
        .filter_map(|name| {
            let parsed = AuthorRef::parse(name);
            if parsed.is_none() {
                log::warn!("line {line}: dropping author {name:?} with empty normalized key");
            }
            parsed
        })
        .collect();

    let entities = raw
        .entities
        .map(|es| {
            es.into_iter()
                .map(|e| match EntityType::parse_lenient(&e.entity_type) {
                    Some(entity_type) => Ok(EntityAnnotation {
                        text: e.text,
                        id: e.id,
                        entity_type,
                    }),
                    None => Err(CorpusError::UnknownEntityType {
                        line,
                        text: e.text,
                        entity_type: e.entity_type,
                    }),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;

    Ok(PaperRecord {
        paper_id,
        title,
        abstract_text: raw.abstract_text.unwrap_or_default(),
        authors,
        affiliations: raw.affiliations.unwrap_or_default(),
        journal: raw.journal,
        year: year as i32,
        entities,
        facets: raw.facets.map(FacetAnnotation::normalized),
        topics: raw.topics.map(normalize_values),
    })
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_value(value: &str) -> String {
    value
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn normalize_values(values: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    values
        .iter()
        .map(|v| normalize_value(v))
        .filter(|v| !v.is_empty() && seen.insert(v.clone()))
        .collect()
}

/// Author identity key: lowercase, punctuation dropped, whitespace collapsed.
pub fn normalize_author(raw_name: &str) -> String {
    let cleaned: String = raw_name
        .chars()
        .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
        .collect();
    normalize_value(&cleaned)
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'..='\u{2027}' | '\u{00B7}' | '\u{00BF}' | '\u{00A1}' | '\u{2030}'..='\u{205E}'
    )
}

const ABBREVIATIONS: &[&str] = &[
    "fig.", "figs.", "et al.", "e.g.", "i.e.", "vs.", "dr.", "no.", "approx.", "ref.", "refs.",
    "eq.", "resp.", "cf.", "ca.", "mr.", "mrs.", "ms.", "prof.", "st.",
];

/// Splits text into sentences.
///
/// A boundary is a `.`, `!` or `?` followed by whitespace and then an
/// uppercase letter or a digit. A period that ends a known abbreviation
/// ("Fig.", "et al.", "e.g.", ...) is never a boundary. Returned sentences
/// are trimmed; the whitespace between them is the separator.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;

    let mut i = 0;
    while i < chars.len() {
        let (byte_pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            let has_gap = j > i + 1;
            let next_ok = j < chars.len() && (chars[j].1.is_uppercase() || chars[j].1.is_ascii_digit());
            if has_gap && next_ok && !(c == '.' && ends_with_abbreviation(&text[start..byte_pos + 1])) {
                push_trimmed(&mut sentences, &text[start..byte_pos + c.len_utf8()]);
                start = chars[j].0;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let t = piece.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

fn ends_with_abbreviation(prefix: &str) -> bool {
    let lower = prefix.to_lowercase();
    ABBREVIATIONS.iter().any(|abbr| {
        lower.ends_with(abbr) && {
            let before = &lower[..lower.len() - abbr.len()];
            before.chars().next_back().is_none_or(|c| !c.is_alphanumeric())
        }
    })
}
