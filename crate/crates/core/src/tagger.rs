//! Gazetteer-based entity tagging.
//!
//! Matches are case-insensitive, longest-first, left-to-right and never
//! overlap. A match must start and end on a word boundary, where word
//! characters are alphanumerics and `-` (so "SARS-CoV-2" is one word and
//! "anti-malaria" does not contain a match for "malaria").

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EntityAnnotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Protein,
    Gene,
    Cell,
    Drug,
    Disease,
}

impl EntityType {
    pub const ALL: [EntityType; 5] = [Self::Protein, Self::Gene, Self::Cell, Self::Drug, Self::Disease];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Protein => "protein",
            Self::Gene => "gene",
            Self::Cell => "cell",
            Self::Drug => "drug",
            Self::Disease => "disease",
        }
    }

    /// Accepts the canonical names plus the label sets common NER models emit
    /// (BC5CDR `chemical`, JNLPBA `dna`/`rna`/`cell_line`/`cell_type`).
    pub fn parse_lenient(s: &str) -> Option<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(t) = lower.parse() {
            return Some(t);
        }
        match lower.as_str() {
            "chemical" => Some(Self::Drug),
            "dna" | "rna" => Some(Self::Gene),
            "cell_line" | "cell_type" | "cell-line" | "cell-type" => Some(Self::Cell),
            _ => None,
        }
    }
}

impl FromStr for EntityType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("cannot read gazetteer {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `surface<TAB>canonical_id<TAB>entity_type`")]
    Malformed { line: usize },
    #[error("line {line}: duplicate surface term \"{term}\" (first defined on line {first_line})")]
    DuplicateTerm {
        line: usize,
        term: String,
        first_line: usize,
    },
    #[error("line {line}: unknown entity type \"{entity_type}\"")]
    UnknownType { line: usize, entity_type: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub canonical_id: String,
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gazetteer {
    entries: BTreeMap<String, GazetteerEntry>,
    /// Longest surface term, in chars.
    max_term_chars: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a term, returning `false` if the folded surface form already exists.
    pub fn insert(&mut self, surface: &str, canonical_id: &str, entity_type: EntityType) -> bool {
        let key = fold(surface.trim());
        if key.is_empty() || self.entries.contains_key(&key) {
            return false;
        }
        self.max_term_chars = self.max_term_chars.max(key.chars().count());
        self.entries.insert(
            key,
            GazetteerEntry {
                canonical_id: canonical_id.to_string(),
                entity_type,
            },
        );
        true
    }

    /// A per-paper gazetteer built from precomputed annotations. The first
    /// annotation for a surface form wins.
    pub fn from_annotations(annotations: &[EntityAnnotation]) -> Self {
        let mut g = Self::new();
        for a in annotations {
            g.insert(&a.text, &a.id, a.entity_type);
        }
        g
    }

    pub fn parse(text: &str) -> Result<Self, GazetteerError> {
        let mut g = Self::new();
        let mut first_line: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
            if cols.len() != 3 || cols.iter().any(|c| c.trim().is_empty()) {
                return Err(GazetteerError::Malformed { line });
            }
            let (surface, id, ty) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            let entity_type = ty
                .to_ascii_lowercase()
                .parse::<EntityType>()
                .map_err(|_| GazetteerError::UnknownType {
                    line,
                    entity_type: ty.to_string(),
                })?;
            let key = fold(surface);
            if let Some(&first) = first_line.get(&key) {
                return Err(GazetteerError::DuplicateTerm {
                    line,
                    term: key,
                    first_line: first,
                });
            }
            first_line.insert(key, line);
            g.insert(surface, id, entity_type);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<&GazetteerEntry> {
        self.entries.get(&fold(surface))
    }

    pub fn contains_id(&self, canonical_id: &str) -> bool {
        self.entries.values().any(|e| e.canonical_id == canonical_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &GazetteerEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

pub fn load_gazetteer(path: impl AsRef<Path>) -> Result<Gazetteer, GazetteerError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GazetteerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Gazetteer::parse(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub canonical_id: String,
    pub entity_type: EntityType,
    /// Char offsets `[start, end)` into the sentence.
    pub char_span: (usize, usize),
    pub surface: String,
}

fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Char-wise lowercase that never changes the char count.
fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

pub fn tag_entities(sentence: &str, gazetteer: &Gazetteer) -> Vec<EntityMention> {
    if sentence.is_empty() || gazetteer.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = sentence.chars().collect();
    let folded: String = chars.iter().copied().map(fold_char).collect();
    // byte offset of each char in `folded`, plus the end
    let mut offsets: Vec<usize> = folded.char_indices().map(|(b, _)| b).collect();
    offsets.push(folded.len());

    let n = chars.len();
    let ends_word = |pos: usize| pos == n || !is_word_char(chars[pos]);
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < n {
        let starts_word = i == 0 || !is_word_char(chars[i - 1]);
        if starts_word {
            let longest = gazetteer.max_term_chars.min(n - i);
            let hit = (1..=longest).rev().find_map(|len| {
                let end = i + len;
                if !ends_word(end) {
                    return None;
                }
                gazetteer
                    .entries
                    .get(&folded[offsets[i]..offsets[end]])
                    .map(|entry| (end, entry))
            });
            if let Some((end, entry)) = hit {
                mentions.push(EntityMention {
                    canonical_id: entry.canonical_id.clone(),
                    entity_type: entry.entity_type,
                    char_span: (i, end),
                    surface: chars[i..end].iter().collect(),
                });
                i = end;
                continue;
            }
        }
        i += 1;
    }
    mentions
}
