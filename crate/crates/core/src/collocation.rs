//! Sentence-level entity collocation graph.
//!
//! Two entities collocate when they are mentioned in the same sentence of a
//! paper's title or abstract. Each sentence contributes at most 1 to a pair,
//! however often the pair repeats inside it.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{split_sentences, CorpusSnapshot, PaperRecord, PaperSummary};
use crate::pair_map::{self, ordered};
use crate::tagger::{tag_entities, EntityType, Gazetteer};

#[derive(Debug, Error, PartialEq)]
pub enum CollocationError {
    #[error("unknown term \"{term}\"")]
    UnknownTerm { term: String, suggestions: Vec<String> },
    #[error("no collocation edge between \"{a}\" and \"{b}\"")]
    MissingEdge { a: String, b: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub count: u32,
    pub paper_ids: BTreeSet<String>,
}

/// Unfiltered collocation counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollocationCounts {
    /// Type of each entity, as first seen in corpus order.
    pub node_types: BTreeMap<String, EntityType>,
    #[serde(with = "pair_map")]
    pub edges: BTreeMap<(String, String), EdgeStats>,
}

impl CollocationCounts {
    /// Sum of incident edge counts per entity.
    pub fn totals(&self) -> BTreeMap<&str, u64> {
        let mut totals = BTreeMap::new();
        for ((a, b), stats) in &self.edges {
            *totals.entry(a.as_str()).or_insert(0) += u64::from(stats.count);
            *totals.entry(b.as_str()).or_insert(0) += u64::from(stats.count);
        }
        totals
    }
}

/// Distinct canonical ids per sentence of the paper's title and abstract.
///
/// Precomputed `entities` on the record replace gazetteer tagging for that
/// paper; they are located in each sentence with the same matcher.
pub fn sentence_entities(
    paper: &PaperRecord,
    gazetteer: &Gazetteer,
) -> Vec<BTreeMap<String, EntityType>> {
    let local;
    let gaz = match &paper.entities {
        Some(annotations) => {
            local = Gazetteer::from_annotations(annotations);
            &local
        }
        None => gazetteer,
    };
    split_sentences(&paper.title)
        .into_iter()
        .chain(split_sentences(&paper.abstract_text))
        .map(|s| {
            let mut ids = BTreeMap::new();
            for m in tag_entities(&s, gaz) {
                ids.entry(m.canonical_id).or_insert(m.entity_type);
            }
            ids
        })
        .collect()
}

pub fn count_collocations(snapshot: &CorpusSnapshot, gazetteer: &Gazetteer) -> CollocationCounts {
    let per_paper: Vec<_> = snapshot
        .records()
        .par_iter()
        .map(|paper| sentence_entities(paper, gazetteer))
        .collect();

    let mut counts = CollocationCounts::default();
    for (paper, sentences) in snapshot.records().iter().zip(per_paper) {
        for ids in sentences {
            for (id, ty) in &ids {
                counts.node_types.entry(id.clone()).or_insert(*ty);
            }
            let ids: Vec<&String> = ids.keys().collect();
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    let stats = counts.edges.entry(((*a).clone(), (*b).clone())).or_default();
                    stats.count += 1;
                    stats.paper_ids.insert(paper.paper_id.clone());
                }
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollocationNode {
    pub entity_type: EntityType,
    /// Corpus-wide collocation count summed over all partners, before filtering.
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "GraphRepr", into = "GraphRepr")]
pub struct CollocationGraph {
    nodes: BTreeMap<String, CollocationNode>,
    edges: BTreeMap<(String, String), EdgeStats>,
    adjacency: BTreeMap<String, Vec<(String, u32)>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: BTreeMap<String, CollocationNode>,
    #[serde(with = "pair_map")]
    edges: BTreeMap<(String, String), EdgeStats>,
}

impl From<GraphRepr> for CollocationGraph {
    fn from(r: GraphRepr) -> Self {
        Self::from_parts(r.nodes, r.edges)
    }
}

impl From<CollocationGraph> for GraphRepr {
    fn from(g: CollocationGraph) -> Self {
        Self {
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeView {
    pub a: String,
    pub b: String,
    pub count: u32,
}

/// The `{nodes, edges}` export form, also used for neighborhood subgraphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<NodeView>,
    pub edges: Vec<EdgeView>,
}

/// Drops every entity whose total count is below `min_collocation`, together
/// with its edges. One pass: survivors are not re-checked after removal.
pub fn build_collocation_graph(raw: &CollocationCounts, min_collocation: u32) -> CollocationGraph {
    let totals = raw.totals();
    let keep: BTreeMap<&str, u64> = totals
        .into_iter()
        .filter(|(_, t)| *t >= u64::from(min_collocation))
        .collect();
    let nodes = keep
        .iter()
        .map(|(id, total)| {
            (
                id.to_string(),
                CollocationNode {
                    entity_type: raw.node_types[*id],
                    total: *total,
                },
            )
        })
        .collect();
    let edges = raw
        .edges
        .iter()
        .filter(|((a, b), _)| keep.contains_key(a.as_str()) && keep.contains_key(b.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    CollocationGraph::from_parts(nodes, edges)
}

impl CollocationGraph {
    fn from_parts(nodes: BTreeMap<String, CollocationNode>, edges: BTreeMap<(String, String), EdgeStats>) -> Self {
        let mut adjacency: BTreeMap<String, Vec<(String, u32)>> = BTreeMap::new();
        for ((a, b), stats) in &edges {
            adjacency.entry(a.clone()).or_default().push((b.clone(), stats.count));
            adjacency.entry(b.clone()).or_default().push((a.clone(), stats.count));
        }
        for list in adjacency.values_mut() {
            list.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        }
        Self { nodes, edges, adjacency }
    }

    pub fn node(&self, id: &str) -> Option<&CollocationNode> {
        self.nodes.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<&EdgeStats> {
        let (x, y) = ordered(a, b);
        self.edges.get(&(x.to_string(), y.to_string()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &EdgeStats)> {
        self.edges.iter().map(|((a, b), s)| (a.as_str(), b.as_str(), s))
    }

    pub fn export(&self) -> GraphExport {
        GraphExport {
            nodes: self.nodes.keys().map(|id| self.node_view(id)).collect(),
            edges: self
                .edges
                .iter()
                .map(|((a, b), s)| EdgeView {
                    a: a.clone(),
                    b: b.clone(),
                    count: s.count,
                })
                .collect(),
        }
    }

    fn node_view(&self, id: &str) -> NodeView {
        let n = &self.nodes[id];
        NodeView {
            id: id.to_string(),
            entity_type: n.entity_type,
            total: n.total,
        }
    }

    /// Up to 5 ids sharing the longest case-insensitive prefix with `term`.
    pub fn suggest(&self, term: &str) -> Vec<String> {
        let term = term.to_lowercase();
        let mut scored: Vec<(usize, &String)> = self
            .nodes
            .keys()
            .map(|id| {
                let shared = id
                    .to_lowercase()
                    .chars()
                    .zip(term.chars())
                    .take_while(|(a, b)| a == b)
                    .count();
                (shared, id)
            })
            .filter(|(shared, _)| *shared > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(5).map(|(_, id)| id.clone()).collect()
    }

    /// The query entity, its top-`k` neighbors by count (ties by id), and all
    /// edges among that node set.
    pub fn related_terms(&self, term: &str, k: usize) -> Result<GraphExport, CollocationError> {
        if !self.nodes.contains_key(term) {
            return Err(CollocationError::UnknownTerm {
                term: term.to_string(),
                suggestions: self.suggest(term),
            });
        }
        let mut selected: Vec<&str> = vec![term];
        if let Some(neigh) = self.adjacency.get(term) {
            selected.extend(neigh.iter().take(k).map(|(id, _)| id.as_str()));
        }
        let mut ids = selected.clone();
        ids.sort_unstable();

        let mut edges = Vec::new();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if let Some(stats) = self.edges.get(&(a.to_string(), b.to_string())) {
                    edges.push(EdgeView {
                        a: a.to_string(),
                        b: b.to_string(),
                        count: stats.count,
                    });
                }
            }
        }
        Ok(GraphExport {
            nodes: selected.iter().map(|id| self.node_view(id)).collect(),
            edges,
        })
    }

    /// Papers supporting an edge, newest first then by paper id.
    pub fn papers_for_pair(
        &self,
        snapshot: &CorpusSnapshot,
        a: &str,
        b: &str,
    ) -> Result<Vec<PaperSummary>, CollocationError> {
        let stats = self.edge(a, b).ok_or_else(|| CollocationError::MissingEdge {
            a: a.to_string(),
            b: b.to_string(),
        })?;
        let index = snapshot.id_index();
        let mut papers: Vec<&PaperRecord> = stats
            .paper_ids
            .iter()
            .filter_map(|id| index.get(id.as_str()).map(|&i| &snapshot.records()[i]))
            .collect();
        papers.sort_by(|x, y| y.year.cmp(&x.year).then_with(|| x.paper_id.cmp(&y.paper_id)));
        Ok(papers.into_iter().map(PaperSummary::from).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BuildConfig;
    use crate::corpus::parse_corpus;

    fn gazetteer() -> Gazetteer {
        Gazetteer::parse(
            "ribavirin\tribavirin\tdrug\nchloroquine\tchloroquine\tdrug\ninfection\tinfection\tdisease\nliver damage\tliver damage\tdisease\n",
        )
        .unwrap()
    }

    fn corpus(lines: &[&str]) -> CorpusSnapshot {
        parse_corpus(lines.join("\n").as_bytes(), &BuildConfig::default()).unwrap()
    }

    fn counts(edges: &[(&str, &str, u32)]) -> CollocationCounts {
        let mut c = CollocationCounts::default();
        for (a, b, n) in edges {
            c.node_types.insert(a.to_string(), EntityType::Drug);
            c.node_types.insert(b.to_string(), EntityType::Drug);
            let (x, y) = ordered(a.to_string(), b.to_string());
            c.edges.insert(
                (x, y),
                EdgeStats {
                    count: *n,
                    paper_ids: BTreeSet::from(["p".to_string()]),
                },
            );
        }
        c
    }

    #[test]
    fn three_entities_in_one_sentence() {
        let snap = corpus(&[r#"{"paper_id":"p1","title":"T","abstract":"Ribavirin and Chloroquine treat infection.","year":2020}"#]);
        let c = count_collocations(&snap, &gazetteer());
        let got: Vec<_> = c.edges.iter().map(|((a, b), s)| (a.as_str(), b.as_str(), s.count)).collect();
        assert_eq!(
            got,
            vec![("chloroquine", "infection", 1), ("chloroquine", "ribavirin", 1), ("infection", "ribavirin", 1)]
        );
    }

    #[test]
    fn same_entity_twice_is_not_an_edge() {
        let snap = corpus(&[r#"{"paper_id":"p1","title":"Chloroquine and chloroquine","year":2020}"#]);
        assert!(count_collocations(&snap, &gazetteer()).edges.is_empty());
        let empty = corpus(&[]);
        assert_eq!(count_collocations(&empty, &gazetteer()), CollocationCounts::default());
    }

    #[test]
    fn repeated_pair_in_sentence_counts_once_across_sentences_adds() {
        let snap = corpus(&[
            r#"{"paper_id":"p1","title":"Ribavirin, chloroquine, ribavirin and chloroquine.","abstract":"Ribavirin beats chloroquine. No entities here.","year":2020}"#,
        ]);
        let c = count_collocations(&snap, &gazetteer());
        assert_eq!(c.edges[&("chloroquine".into(), "ribavirin".into())].count, 2);
    }

    #[test]
    fn precomputed_entities_override_gazetteer() {
        let snap = corpus(&[
            r#"{"paper_id":"p1","title":"Ribavirin and ACE2 in infection.","year":2020,"entities":[{"text":"ACE2","id":"ace2","type":"protein"},{"text":"ribavirin","id":"rbv","type":"chemical"}]}"#,
        ]);
        let c = count_collocations(&snap, &gazetteer());
        assert_eq!(c.edges.keys().cloned().collect::<Vec<_>>(), vec![("ace2".to_string(), "rbv".to_string())]);
        assert_eq!(c.node_types["rbv"], EntityType::Drug);
    }

    #[test]
    fn min_collocation_filter_single_pass() {
        // a-b:1 ; c-d:1, c-e:1
        let raw = counts(&[("a", "b", 1), ("c", "d", 1), ("c", "e", 1)]);
        let g = build_collocation_graph(&raw, 2);
        assert!(g.node("a").is_none() && g.node("b").is_none());
        assert_eq!(g.node("c").unwrap().total, 2);
        assert!(g.node("d").is_none());
        assert_eq!(g.edge_count(), 0);

        let all = build_collocation_graph(&raw, 0);
        assert_eq!(all.node_count(), 5);
        assert_eq!(all.edge_count(), raw.edges.len());
    }

    #[test]
    fn conservation_of_totals() {
        let raw = counts(&[("a", "b", 4), ("b", "c", 2), ("a", "c", 1), ("c", "d", 7)]);
        let node_sum: u64 = raw.totals().values().sum();
        let edge_sum: u64 = raw.edges.values().map(|s| u64::from(s.count)).sum();
        assert_eq!(node_sum, 2 * edge_sum);
    }

    #[test]
    fn related_terms_top_k_with_inter_neighbor_edges() {
        let raw = counts(&[("hub", "x", 5), ("hub", "y", 3), ("hub", "z", 1), ("x", "y", 2), ("y", "z", 9)]);
        let g = build_collocation_graph(&raw, 0);
        let sub = g.related_terms("hub", 2).unwrap();
        let ids: Vec<_> = sub.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, vec!["hub", "x", "y"]);
        let edges: Vec<_> = sub.edges.iter().map(|e| (e.a.as_str(), e.b.as_str(), e.count)).collect();
        assert_eq!(edges, vec![("hub", "x", 5), ("hub", "y", 3), ("x", "y", 2)]);

        let whole = g.related_terms("hub", 10).unwrap();
        assert_eq!(whole.nodes.len(), 4);
        assert_eq!(whole.edges.len(), 5);
    }

    #[test]
    fn related_terms_ties_by_id() {
        let raw = counts(&[("q", "b", 2), ("q", "a", 2), ("q", "c", 2)]);
        let g = build_collocation_graph(&raw, 0);
        let sub = g.related_terms("q", 2).unwrap();
        assert_eq!(sub.nodes.iter().map(|n| n.id.as_str()).collect::<Vec<_>>(), vec!["q", "a", "b"]);
    }

    #[test]
    fn unknown_term_suggests_by_prefix() {
        let raw = counts(&[("chloroquine", "ribavirin", 3), ("chlorine", "ribavirin", 2)]);
        let g = build_collocation_graph(&raw, 0);
        match g.related_terms("chloro", 3).unwrap_err() {
            CollocationError::UnknownTerm { suggestions, .. } => {
                assert_eq!(suggestions, vec!["chloroquine", "chlorine"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn papers_for_pair_by_recency_and_symmetry() {
        let snap = corpus(&[
            r#"{"paper_id":"p1","title":"Ribavirin with chloroquine.","year":2019}"#,
            r#"{"paper_id":"p2","title":"Chloroquine or ribavirin.","year":2021}"#,
            r#"{"paper_id":"p3","title":"Ribavirin alone.","year":2022}"#,
        ]);
        let g = build_collocation_graph(&count_collocations(&snap, &gazetteer()), 0);
        let ids = |v: Vec<PaperSummary>| v.into_iter().map(|p| p.paper_id).collect::<Vec<_>>();
        let fwd = ids(g.papers_for_pair(&snap, "ribavirin", "chloroquine").unwrap());
        let rev = ids(g.papers_for_pair(&snap, "chloroquine", "ribavirin").unwrap());
        assert_eq!(fwd, vec!["p2", "p1"]);
        assert_eq!(fwd, rev);
        assert!(matches!(
            g.papers_for_pair(&snap, "ribavirin", "infection"),
            Err(CollocationError::MissingEdge { .. })
        ));
    }

    #[test]
    fn graph_serde_round_trip() {
        let raw = counts(&[("a", "b", 4), ("b", "c", 2)]);
        let g = build_collocation_graph(&raw, 0);
        let json = serde_json::to_string(&g).unwrap();
        let back: CollocationGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let export = serde_json::to_value(g.export()).unwrap();
        assert_eq!(export["edges"][0], serde_json::json!({"a": "a", "b": "b", "count": 4}));
        assert_eq!(export["nodes"][0], serde_json::json!({"id": "a", "type": "drug", "total": 4}));
    }
}
