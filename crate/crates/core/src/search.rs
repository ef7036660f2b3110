//! Group search: facet overlap averaged with weighted PageRank over the two
//! meta-edge layers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_author, normalize_value};
use crate::facets::{top_k_counts, Suggestion};
use crate::links::{Layer, MetaGraph};
use crate::profile::{GroupCard, Ranked};

/// Number of top-ranked groups whose cards feed facet suggestions.
pub const SUGGESTION_POOL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankConfig {
    pub damping: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            epsilon: 1e-10,
            max_iters: 200,
        }
    }
}

impl PageRankConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(format!("damping must be in (0, 1), got {}", self.damping));
        }
        if self.epsilon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Power iteration of a weight-proportional random walk with uniform
/// teleport on an undirected graph over `nodes`. Negative weights count as 0;
/// edges touching unknown nodes are ignored. Nodes without incident weight
/// spread their mass uniformly.
pub fn weighted_pagerank(
    nodes: &[usize],
    edges: &[(usize, usize, f64)],
    config: &PageRankConfig,
) -> BTreeMap<usize, f64> {
    let n = nodes.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let pos: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut strength = vec![0.0; n];
    for &(a, b, w) in edges {
        let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) else {
            continue;
        };
        let w = w.max(0.0);
        if w == 0.0 || i == j {
            continue;
        }
        adj[i].push((j, w));
        adj[j].push((i, w));
        strength[i] += w;
        strength[j] += w;
    }

    let d = config.damping;
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iters {
        let dangling: f64 = (0..n).filter(|&i| strength[i] == 0.0).map(|i| x[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|v| *v = base);
        for v in 0..n {
            if strength[v] == 0.0 {
                continue;
            }
            let share = d * x[v] / strength[v];
            for &(u, w) in &adj[v] {
                next[u] += share * w;
            }
        }
        // guard against drift so the total stays 1 to rounding
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta < config.epsilon {
            break;
        }
    }
    nodes.iter().copied().zip(x).collect()
}

/// Query-independent scores per layer, computed once per build.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PageRankTables {
    pub topical: BTreeMap<usize, f64>,
    pub social: BTreeMap<usize, f64>,
}

/// Runs PageRank on both layers. The topical layer covers only groups that
/// have a topic vector.
pub fn layer_pageranks(meta: &MetaGraph, config: &PageRankConfig) -> PageRankTables {
    let topical_nodes: Vec<usize> = meta
        .groups
        .iter()
        .copied()
        .filter(|g| !meta.no_vector.contains(g))
        .collect();
    let (topical, social) = rayon::join(
        || weighted_pagerank(&topical_nodes, &meta.layer(Layer::Topical), config),
        || weighted_pagerank(&meta.groups, &meta.layer(Layer::Social), config),
    );
    PageRankTables { topical, social }
}

/// Min–max scaling to [0, 1]; a constant (or empty) table maps to 0.5.
pub fn min_max_normalize(scores: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let lo = scores.values().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|(&g, &s)| {
            let v = if hi > lo { (s - lo) / (hi - lo) } else { 0.5 };
            (g, v)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFacet {
    Topic,
    Author,
    Affiliation,
}

impl GroupFacet {
    pub const ALL: [GroupFacet; 3] = [GroupFacet::Topic, GroupFacet::Author, GroupFacet::Affiliation];

    pub fn normalize(self, value: &str) -> String {
        match self {
            GroupFacet::Author => normalize_author(value),
            _ => normalize_value(value),
        }
    }

    pub fn card_list(self, card: &GroupCard) -> &[Ranked] {
        match self {
            GroupFacet::Topic => &card.topics,
            GroupFacet::Author => &card.authors,
            GroupFacet::Affiliation => &card.affiliations,
        }
    }
}

/// Values searched against group cards. Stored normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupQuery {
    pub topics: BTreeSet<String>,
    pub authors: BTreeSet<String>,
    pub affiliations: BTreeSet<String>,
}

impl GroupQuery {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, facet: GroupFacet, value: &str) -> Self {
        self.add(facet, value);
        self
    }

    /// Adds a value after normalization; values that normalize to nothing are dropped.
    pub fn add(&mut self, facet: GroupFacet, value: &str) {
        let v = facet.normalize(value);
        if !v.is_empty() {
            self.values_mut(facet).insert(v);
        }
    }

    pub fn values(&self, facet: GroupFacet) -> &BTreeSet<String> {
        match facet {
            GroupFacet::Topic => &self.topics,
            GroupFacet::Author => &self.authors,
            GroupFacet::Affiliation => &self.affiliations,
        }
    }

    fn values_mut(&mut self, facet: GroupFacet) -> &mut BTreeSet<String> {
        match facet {
            GroupFacet::Topic => &mut self.topics,
            GroupFacet::Author => &mut self.authors,
            GroupFacet::Affiliation => &mut self.affiliations,
        }
    }

    pub fn is_empty(&self) -> bool {
        GroupFacet::ALL.iter().all(|&f| self.values(f).is_empty())
    }

    pub fn len(&self) -> usize {
        GroupFacet::ALL.iter().map(|&f| self.values(f).len()).sum()
    }

    fn contains(&self, facet: GroupFacet, value: &str) -> bool {
        self.values(facet).contains(value)
    }
}

/// The card's facet set: `(facet, value)` pairs from its truncated lists.
pub fn card_facets(card: &GroupCard) -> BTreeSet<(GroupFacet, &str)> {
    GroupFacet::ALL
        .iter()
        .flat_map(|&f| f.card_list(card).iter().take(card.top_k).map(move |r| (f, r.name.as_str())))
        .collect()
}

/// `|{q ∈ query : q ∈ f}| / |f|` where `f` is the card's facet set.
pub fn facet_overlap(query: &GroupQuery, card: &GroupCard) -> f64 {
    let f = card_facets(card);
    if f.is_empty() || query.is_empty() {
        return 0.0;
    }
    let hits = GroupFacet::ALL
        .iter()
        .flat_map(|&facet| query.values(facet).iter().map(move |v| (facet, v.as_str())))
        .filter(|q| f.contains(q))
        .count();
    hits as f64 / f.len() as f64
}

/// Every non-empty query facet shares at least one value with the card.
pub fn is_candidate(query: &GroupQuery, card: &GroupCard) -> bool {
    GroupFacet::ALL.iter().all(|&facet| {
        let wanted = query.values(facet);
        wanted.is_empty()
            || facet
                .card_list(card)
                .iter()
                .take(card.top_k)
                .any(|r| wanted.contains(&r.name))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGroup {
    pub group_id: usize,
    pub score: f64,
    pub overlap: f64,
    pub pr_topical: f64,
    pub pr_social: f64,
    pub candidate: bool,
}

/// Ranks every card. Candidates come first, each block ordered by final
/// score descending then group id. An empty query orders by member count
/// descending instead.
pub fn rank_groups(query: &GroupQuery, cards: &[GroupCard], pageranks: &PageRankTables) -> Vec<RankedGroup> {
    let topical = min_max_normalize(&pageranks.topical);
    let social = min_max_normalize(&pageranks.social);
    let mut ranked: Vec<(RankedGroup, usize)> = cards
        .iter()
        .map(|card| {
            let overlap = facet_overlap(query, card);
            let pr_topical = topical.get(&card.group_id).copied().unwrap_or(0.5);
            let pr_social = social.get(&card.group_id).copied().unwrap_or(0.5);
            let group = RankedGroup {
                group_id: card.group_id,
                score: (overlap + pr_topical + pr_social) / 3.0,
                overlap,
                pr_topical,
                pr_social,
                candidate: is_candidate(query, card),
            };
            (group, card.member_count)
        })
        .collect();
    if query.is_empty() {
        ranked.sort_by(|(a, ma), (b, mb)| mb.cmp(ma).then_with(|| a.group_id.cmp(&b.group_id)));
    } else {
        ranked.sort_by(|(a, _), (b, _)| {
            b.candidate
                .cmp(&a.candidate)
                .then_with(|| b.score.total_cmp(&a.score))
                .then_with(|| a.group_id.cmp(&b.group_id))
        });
    }
    ranked.into_iter().map(|(g, _)| g).collect()
}

/// Per facet, the `k` values found on the most cards among the top
/// [`SUGGESTION_POOL`] ranked groups, excluding queried values.
pub fn suggest_group_facets(
    query: &GroupQuery,
    ranked: &[RankedGroup],
    cards: &[GroupCard],
    k: usize,
) -> BTreeMap<GroupFacet, Vec<Suggestion>> {
    let by_id: BTreeMap<usize, &GroupCard> = cards.iter().map(|c| (c.group_id, c)).collect();
    let pool: Vec<&GroupCard> = ranked
        .iter()
        .take(SUGGESTION_POOL)
        .filter_map(|r| by_id.get(&r.group_id).copied())
        .collect();
    let mut out = BTreeMap::new();
    for facet in GroupFacet::ALL {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for card in &pool {
            let values: BTreeSet<&str> = facet
                .card_list(card)
                .iter()
                .take(card.top_k)
                .map(|r| r.name.as_str())
                .collect();
            for v in values.into_iter().filter(|v| !query.contains(facet, v)) {
                *counts.entry(v.to_string()).or_insert(0) += 1;
            }
        }
        let top = top_k_counts(counts, k);
        if !top.is_empty() {
            out.insert(facet, top);
        }
    }
    out
}
