//! The persisted index: every structure the query layer needs, built in one
//! pass and written as a single versioned file.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! magic "LITMAPIX" | u32 format_version | u32 section count
//! per section: u16 name length | name | u64 payload length | JSON payload
//! 32-byte SHA-256 of everything above
//! ```
//!
//! Every map inside is ordered and no timestamps are written, so identical
//! inputs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coauthor::{build_coauthor_graph, giant_component, CoauthorGraph};
use crate::collocation::{build_collocation_graph, count_collocations, CollocationGraph};
use crate::community::{ego_split, membership_stats, recursive_split, ClusterSet, EgoSplitConfig};
use crate::config::BuildConfig;
use crate::corpus::{load_corpus, CorpusError, CorpusSnapshot};
use crate::facets::FacetIndex;
use crate::links::{build_meta_graph, EmbeddingError, EmbeddingProvider, FileEmbeddings, MetaGraph, TrigramEmbedder};
use crate::profile::{build_profiles, find_bridges, Bridge, GroupCard, GroupProfile};
use crate::search::{layer_pageranks, PageRankTables};
use crate::tagger::{load_gazetteer, Gazetteer, GazetteerError};

pub const MAGIC: &[u8; 8] = b"LITMAPIX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("stage \"{stage}\" failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not an index file (bad magic bytes)")]
    BadMagic,
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index file is truncated")]
    Truncated,
    #[error("index digest mismatch: file is corrupt")]
    DigestMismatch,
    #[error("index section \"{0}\" is missing")]
    MissingSection(String),
    #[error("index section \"{section}\" is malformed: {message}")]
    Section { section: String, message: String },
    #[error("index is inconsistent: {0}")]
    Inconsistent(String),
}

impl IndexError {
    /// Name of the failing build stage, if this error came from one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            IndexError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

fn stage(stage: &'static str) -> impl FnOnce(StageError) -> IndexError {
    move |source| IndexError::Stage { stage, source }
}

/// Everything the service reads. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSnapshot {
    pub format_version: u32,
    pub build_config: BuildConfig,
    pub corpus: CorpusSnapshot,
    pub collocations: CollocationGraph,
    pub facets: FacetIndex,
    pub coauthors: CoauthorGraph,
    pub clusters: ClusterSet,
    pub profiles: Vec<GroupProfile>,
    pub cards: Vec<GroupCard>,
    pub meta: MetaGraph,
    pub pageranks: PageRankTables,
    pub bridges: Vec<Bridge>,
    /// Clusters-per-author histogram.
    pub membership: BTreeMap<usize, usize>,
}

fn validate_config(config: &BuildConfig) -> Result<(), StageError> {
    config.pagerank.validate().map_err(StageError::Config)?;
    if config.max_cluster_size == 0 {
        return Err(StageError::Config("max_cluster_size must be at least 1".into()));
    }
    if config.top_k == 0 {
        return Err(StageError::Config("top_k must be at least 1".into()));
    }
    Ok(())
}

fn timed<T>(name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    log::info!("stage {name}: {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
    out
}

/// Runs the pipeline from in-memory inputs.
pub fn build_snapshot(
    corpus: CorpusSnapshot,
    gazetteer: &Gazetteer,
    provider: &dyn EmbeddingProvider,
    config: &BuildConfig,
) -> Result<IndexSnapshot, IndexError> {
    validate_config(config).map_err(stage("config"))?;
    let counts = timed("collocation", || count_collocations(&corpus, gazetteer));
    let collocations = build_collocation_graph(&counts, config.min_collocation);
    let facets = timed("facets", || FacetIndex::build(&corpus));
    let full = timed("coauthor", || {
        build_coauthor_graph(&corpus, config.min_year, config.max_paper_authors)
    });
    let coauthors = giant_component(&full);
    let ego = EgoSplitConfig {
        max_iters: config.label_propagation_max_iters,
    };
    let clusters = timed("ego_split", || {
        let initial = ego_split(&coauthors, &ego);
        recursive_split(&initial, &coauthors, config.max_cluster_size, &ego)
    });
    let profiles = timed("profiles", || build_profiles(&corpus, &clusters, config.min_year));
    let cards: Vec<GroupCard> = profiles.iter().map(|p| p.card(config.top_k)).collect();
    let meta = timed("links", || build_meta_graph(&cards, &clusters, provider, config.k_link));
    let pageranks = timed("pagerank", || layer_pageranks(&meta, &config.pagerank));
    let bridges = find_bridges(&clusters);
    let membership = membership_stats(&clusters);
    log::info!(
        "built index: {} papers, {} entities, {} authors, {} groups",
        corpus.len(),
        collocations.node_count(),
        coauthors.node_count(),
        clusters.len()
    );
    Ok(IndexSnapshot {
        format_version: FORMAT_VERSION,
        build_config: config.clone(),
        corpus,
        collocations,
        facets,
        coauthors,
        clusters,
        profiles,
        cards,
        meta,
        pageranks,
        bridges,
        membership,
    })
}

/// Loads inputs from disk and runs the pipeline. The embedding provider is
/// the file named in `config.embedding_file`, or the trigram default.
pub fn build_index(
    corpus_path: impl AsRef<Path>,
    gazetteer_path: impl AsRef<Path>,
    config: &BuildConfig,
) -> Result<IndexSnapshot, IndexError> {
    let corpus = load_corpus(corpus_path, config)
        .map_err(StageError::from)
        .map_err(stage("corpus"))?;
    let gazetteer = load_gazetteer(gazetteer_path)
        .map_err(StageError::from)
        .map_err(stage("gazetteer"))?;
    match &config.embedding_file {
        Some(path) => {
            let provider = FileEmbeddings::load(path)
                .map_err(StageError::from)
                .map_err(stage("embeddings"))?;
            build_snapshot(corpus, &gazetteer, &provider, config)
        }
        None => build_snapshot(corpus, &gazetteer, &TrigramEmbedder::default(), config),
    }
}

const SECTIONS: [&str; 12] = [
    "config",
    "corpus",
    "collocations",
    "facets",
    "coauthors",
    "clusters",
    "profiles",
    "cards",
    "meta",
    "pageranks",
    "bridges",
    "membership",
];

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("index structures serialize")
}

impl IndexSnapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let payloads: [Vec<u8>; 12] = [
            json(&self.build_config),
            json(&self.corpus),
            json(&self.collocations),
            json(&self.facets),
            json(&self.coauthors),
            json(&self.clusters),
            json(&self.profiles),
            json(&self.cards),
            json(&self.meta),
            json(&self.pageranks),
            json(&self.bridges),
            json(&self.membership),
        ];
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.format_version.to_le_bytes());
        out.extend_from_slice(&(SECTIONS.len() as u32).to_le_bytes());
        for (name, payload) in SECTIONS.iter().zip(&payloads) {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
            out.extend_from_slice(payload);
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let mut r = Reader {
            bytes,
            pos: MAGIC.len(),
        };
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(IndexError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < r.pos + 32 {
            return Err(IndexError::Truncated);
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(IndexError::DigestMismatch);
        }
        let mut r = Reader {
            bytes: body,
            pos: r.pos,
        };
        let count = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        let mut sections: BTreeMap<String, &[u8]> = BTreeMap::new();
        for _ in 0..count {
            let name_len = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
            let name = String::from_utf8_lossy(r.take(name_len)?).into_owned();
            let len = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
            sections.insert(name, r.take(len)?);
        }
        let s = Sections(sections);
        let snapshot = Self {
            format_version: version,
            build_config: s.get("config")?,
            corpus: s.get("corpus")?,
            collocations: s.get("collocations")?,
            facets: s.get("facets")?,
            coauthors: s.get("coauthors")?,
            clusters: s.get("clusters")?,
            profiles: s.get("profiles")?,
            cards: s.get("cards")?,
            meta: s.get("meta")?,
            pageranks: s.get("pageranks")?,
            bridges: s.get("bridges")?,
            membership: s.get("membership")?,
        };
        snapshot.validate()?;
        Ok(snapshot)
    }

    /// SHA-256 of the serialized snapshot, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = self.to_bytes();
        hex::encode(&bytes[bytes.len() - 32..])
    }

    /// Writes via a sibling temporary file and a rename, so readers never see
    /// a partial file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let path = path.as_ref();
        let io = |source| IndexError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, self.to_bytes()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| IndexError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// Cross-structure reference checks.
    pub fn validate(&self) -> Result<(), IndexError> {
        let bad = |m: String| Err(IndexError::Inconsistent(m));
        let n = self.clusters.len();
        if self.profiles.len() != n || self.cards.len() != n {
            return bad(format!(
                "{n} clusters but {} profiles and {} cards",
                self.profiles.len(),
                self.cards.len()
            ));
        }
        let ids = self.corpus.id_index();
        for (gid, p) in self.profiles.iter().enumerate() {
            if p.group_id != gid || self.cards[gid].group_id != gid {
                return bad(format!("group {gid} stored out of order"));
            }
            if let Some(missing) = p.paper_ids.iter().find(|id| !ids.contains_key(id.as_str())) {
                return bad(format!("group {gid} references unknown paper {missing}"));
            }
        }
        for members in self.clusters.clusters() {
            if let Some(a) = members.iter().find(|a| !self.coauthors.nodes().contains(*a)) {
                return bad(format!("cluster member {a} is not in the co-authorship graph"));
            }
        }
        let in_range = |g: &usize| *g < n;
        let meta_ok = self.meta.groups.iter().all(in_range)
            && self.meta.topical.keys().chain(self.meta.social.keys()).all(|(a, b)| in_range(a) && in_range(b))
            && self.pageranks.topical.keys().chain(self.pageranks.social.keys()).all(in_range)
            && self.bridges.iter().all(|b| in_range(&b.groups.0) && in_range(&b.groups.1));
        if !meta_ok {
            return bad("group id out of range in links, scores or bridges".into());
        }
        for (a, b, stats) in self.collocations.edges() {
            if let Some(p) = stats.paper_ids.iter().find(|p| !ids.contains_key(p.as_str())) {
                return bad(format!("collocation {a}–{b} references unknown paper {p}"));
            }
        }
        Ok(())
    }

    pub fn profile(&self, group_id: usize) -> Option<&GroupProfile> {
        self.profiles.get(group_id)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).ok_or(IndexError::Truncated)?;
        let slice = self.bytes.get(self.pos..end).ok_or(IndexError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }
}

struct Sections<'a>(BTreeMap<String, &'a [u8]>);

impl Sections<'_> {
    fn get<T: DeserializeOwned>(&self, name: &str) -> Result<T, IndexError> {
        let bytes = self.0.get(name).ok_or_else(|| IndexError::MissingSection(name.into()))?;
        serde_json::from_slice(bytes).map_err(|e| IndexError::Section {
            section: name.into(),
            message: e.to_string(),
        })
    }
}

/// Serialized form of [`IndexSnapshot`] metadata for health checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub format_version: u32,
    pub papers: usize,
    pub entities: usize,
    pub authors: usize,
    pub groups: usize,
    pub corpus_hash: String,
}

impl From<&IndexSnapshot> for IndexSummary {
    fn from(s: &IndexSnapshot) -> Self {
        Self {
            format_version: s.format_version,
            papers: s.corpus.len(),
            entities: s.collocations.node_count(),
            authors: s.coauthors.node_count(),
            groups: s.clusters.len(),
            corpus_hash: s.corpus.content_hash().to_string(),
        }
    }
}
