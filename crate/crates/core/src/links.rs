//! Meta-edges between groups.
//!
//! The topical layer links each group to its `k_link` nearest groups by
//! cosine similarity of TF-IDF-weighted mean topic embeddings. The social
//! layer links every pair of groups that share authors, weighted by the
//! number shared.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::ClusterSet;
use crate::corpus::normalize_value;
use crate::pair_map;
use crate::profile::{pairwise_overlaps, GroupCard};

pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("cannot embed an empty topic")]
    EmptyTopic,
    #[error("topic \"{0}\" produced a zero vector")]
    ZeroVector(String),
    #[error("no embedding for topic \"{0}\"")]
    UnknownTopic(String),
    #[error("embedding file {path}: {message}")]
    File { path: String, message: String },
}

/// Maps a topic string to a unit vector of fixed dimension. Implementations
/// must be deterministic.
pub trait EmbeddingProvider: Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, topic: &str) -> Result<Vec<f64>, EmbeddingError>;
}

/// Signed feature hashing of padded character trigrams.
#[derive(Debug, Clone, Copy)]
pub struct TrigramEmbedder {
    dimension: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl TrigramEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0);
        Self { dimension }
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn l2_normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

impl EmbeddingProvider for TrigramEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, topic: &str) -> Result<Vec<f64>, EmbeddingError> {
        let normalized = normalize_value(topic);
        if normalized.is_empty() {
            return Err(EmbeddingError::EmptyTopic);
        }
        let padded: Vec<char> = std::iter::once(' ')
            .chain(normalized.chars())
            .chain(std::iter::once(' '))
            .collect();
        let mut v = vec![0.0; self.dimension];
        let mut buf = String::new();
        for w in padded.windows(3) {
            buf.clear();
            buf.extend(w);
            let h = fnv1a(buf.as_bytes());
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        if l2_normalize(&mut v) == 0.0 {
            return Err(EmbeddingError::ZeroVector(normalized));
        }
        Ok(v)
    }
}

/// Precomputed embeddings read from `topic<TAB>v1,...,vD` lines. Vectors are
/// L2-normalized on load; topics are matched after normalization.
#[derive(Debug, Clone)]
pub struct FileEmbeddings {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl FileEmbeddings {
    pub fn parse(text: &str, path: &str) -> Result<Self, EmbeddingError> {
        let err = |line: usize, message: &str| EmbeddingError::File {
            path: path.to_string(),
            message: format!("line {line}: {message}"),
        };
        let mut dimension = None;
        let mut vectors = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (topic, values) = raw.split_once('\t').ok_or_else(|| err(line, "expected topic<TAB>values"))?;
            let mut v = values
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(line, &e.to_string()))?;
            if *dimension.get_or_insert(v.len()) != v.len() {
                return Err(err(line, "inconsistent dimension"));
            }
            if v.iter().any(|x| !x.is_finite()) || l2_normalize(&mut v) == 0.0 {
                return Err(err(line, "vector must be finite and nonzero"));
            }
            let key = normalize_value(topic);
            if key.is_empty() {
                return Err(err(line, "empty topic"));
            }
            vectors.insert(key, v);
        }
        Ok(Self {
            dimension: dimension.unwrap_or(0),
            vectors,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| EmbeddingError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for FileEmbeddings {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, topic: &str) -> Result<Vec<f64>, EmbeddingError> {
        let key = normalize_value(topic);
        if key.is_empty() {
            return Err(EmbeddingError::EmptyTopic);
        }
        self.vectors.get(&key).cloned().ok_or(EmbeddingError::UnknownTopic(key))
    }
}

/// TF-IDF-weighted mean of the card's positively scored topic embeddings,
/// not renormalized. Topics the provider cannot embed are skipped. `None`
/// when no weight remains.
pub fn group_vector(card: &GroupCard, provider: &dyn EmbeddingProvider) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; provider.dimension()];
    let mut total = 0.0;
    for t in card.topics.iter().filter(|t| t.score > 0.0) {
        match provider.embed(&t.name) {
            Ok(e) => {
                for (s, x) in sum.iter_mut().zip(&e) {
                    *s += t.score * x;
                }
                total += t.score;
            }
            Err(e) => log::warn!("group {}: skipping topic: {e}", card.group_id),
        }
    }
    if total <= 0.0 {
        return None;
    }
    sum.iter_mut().for_each(|x| *x /= total);
    Some(sum)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Group-level graph with the two edge layers. Keys are `(low_id, high_id)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetaGraph {
    pub groups: Vec<usize>,
    #[serde(with = "pair_map")]
    pub topical: BTreeMap<(usize, usize), f64>,
    #[serde(with = "pair_map")]
    pub social: BTreeMap<(usize, usize), u32>,
    /// Groups without a usable topic vector.
    pub no_vector: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Topical,
    Social,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEdge {
    pub layer: Layer,
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl MetaGraph {
    /// One layer as `(a, b, weight)` triples.
    pub fn layer(&self, layer: Layer) -> Vec<(usize, usize, f64)> {
        match layer {
            Layer::Topical => self.topical.iter().map(|(&(a, b), &w)| (a, b, w)).collect(),
            Layer::Social => self.social.iter().map(|(&(a, b), &w)| (a, b, f64::from(w))).collect(),
        }
    }

    /// Layer-tagged edges touching `group`.
    pub fn incident(&self, group: usize) -> Vec<MetaEdge> {
        self.edges_where(|a, b| a == group || b == group)
    }

    /// Layer-tagged edges with both ends in `groups`.
    pub fn among(&self, groups: &[usize]) -> Vec<MetaEdge> {
        self.edges_where(|a, b| groups.contains(&a) && groups.contains(&b))
    }

    fn edges_where(&self, keep: impl Fn(usize, usize) -> bool) -> Vec<MetaEdge> {
        [Layer::Topical, Layer::Social]
            .into_iter()
            .flat_map(|layer| {
                self.layer(layer)
                    .into_iter()
                    .filter(|&(a, b, _)| keep(a, b))
                    .map(move |(a, b, weight)| MetaEdge { layer, a, b, weight })
            })
            .collect()
    }
}

/// Each group's `k_link` most similar groups (ties by group id), unioned.
pub fn topical_links(vectors: &BTreeMap<usize, Vec<f64>>, k_link: usize) -> BTreeMap<(usize, usize), f64> {
    let ids: Vec<usize> = vectors.keys().copied().collect();
    let nearest: Vec<Vec<(usize, f64)>> = ids
        .par_iter()
        .map(|&g| {
            let mut sims: Vec<(usize, f64)> = ids
                .iter()
                .filter(|&&h| h != g)
                .map(|&h| {
                    let (lo, hi) = (g.min(h), g.max(h));
                    (h, cosine(&vectors[&lo], &vectors[&hi]))
                })
                .collect();
            sims.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            sims.truncate(k_link);
            sims
        })
        .collect();
    let mut edges = BTreeMap::new();
    for (&g, list) in ids.iter().zip(nearest) {
        for (h, sim) in list {
            edges.insert((g.min(h), g.max(h)), sim);
        }
    }
    edges
}

pub fn social_links(clusters: &ClusterSet) -> BTreeMap<(usize, usize), u32> {
    pairwise_overlaps(clusters)
        .into_iter()
        .map(|(pair, shared)| (pair, shared.len() as u32))
        .collect()
}

pub fn build_meta_graph(
    cards: &[GroupCard],
    clusters: &ClusterSet,
    provider: &dyn EmbeddingProvider,
    k_link: usize,
) -> MetaGraph {
    let computed: Vec<(usize, Option<Vec<f64>>)> = cards
        .par_iter()
        .map(|c| (c.group_id, group_vector(c, provider)))
        .collect();
    let mut vectors = BTreeMap::new();
    let mut no_vector = Vec::new();
    for (gid, v) in computed {
        match v {
            Some(v) => {
                vectors.insert(gid, v);
            }
            None => no_vector.push(gid),
        }
    }
    MetaGraph {
        groups: cards.iter().map(|c| c.group_id).collect(),
        topical: topical_links(&vectors, k_link),
        social: social_links(clusters),
        no_vector,
    }
}
