//! Weighted co-authorship graph and its giant component.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSnapshot;
use crate::pair_map::{self, ordered};

/// Authors linked by co-authored papers. Edge weight = number of shared papers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoauthorGraph {
    nodes: BTreeSet<String>,
    #[serde(with = "pair_map")]
    edges: BTreeMap<(String, String), u32>,
    node_papers: BTreeMap<String, BTreeSet<String>>,
}

impl CoauthorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, key: &str) {
        self.nodes.insert(key.to_string());
    }

    /// Adds `weight` to the edge, creating both endpoints. Self-loops are ignored.
    pub fn add_edge(&mut self, a: &str, b: &str, weight: u32) {
        if a == b {
            return;
        }
        self.add_node(a);
        self.add_node(b);
        let (x, y) = ordered(a, b);
        *self.edges.entry((x.to_string(), y.to_string())).or_insert(0) += weight;
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u32> {
        let (x, y) = ordered(a, b);
        self.edges.get(&(x.to_string(), y.to_string())).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.edges.iter().map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    pub fn papers_of(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.node_papers.get(key)
    }

    /// Subgraph induced on `members`; node papers carried over.
    pub fn induced(&self, members: &BTreeSet<String>) -> Self {
        let nodes: BTreeSet<String> = members.intersection(&self.nodes).cloned().collect();
        let edges = self
            .edges
            .iter()
            .filter(|((a, b), _)| nodes.contains(a) && nodes.contains(b))
            .map(|(k, w)| (k.clone(), *w))
            .collect();
        let node_papers = self
            .node_papers
            .iter()
            .filter(|(k, _)| nodes.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Self {
            nodes,
            edges,
            node_papers,
        }
    }

    /// Index-based adjacency with neighbor lists sorted by index.
    pub fn adjacency(&self) -> Adjacency {
        let keys: Vec<String> = self.nodes.iter().cloned().collect();
        let pos: BTreeMap<&str, usize> = keys.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let mut neighbors = vec![Vec::new(); keys.len()];
        for ((a, b), w) in &self.edges {
            let (i, j) = (pos[a.as_str()], pos[b.as_str()]);
            neighbors[i].push((j, f64::from(*w)));
            neighbors[j].push((i, f64::from(*w)));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(j, _)| j);
        }
        Adjacency { keys, neighbors }
    }

    /// Edge list as `key_a<TAB>key_b<TAB>weight` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for ((a, b), w) in &self.edges {
            let _ = writeln!(out, "{a}\t{b}\t{w}");
        }
        out
    }
}

/// Undirected weighted graph over `0..n`, keyed back to author keys.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub keys: Vec<String>,
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Co-authorship graph over papers from `min_year` on. Papers listing more
/// than `max_paper_authors` distinct authors add nodes but no edges.
pub fn build_coauthor_graph(snapshot: &CorpusSnapshot, min_year: i32, max_paper_authors: usize) -> CoauthorGraph {
    let mut g = CoauthorGraph::new();
    for paper in snapshot.records().iter().filter(|p| p.year >= min_year) {
        let keys = paper.author_keys();
        for k in &keys {
            g.add_node(k);
            g.node_papers
                .entry(k.to_string())
                .or_default()
                .insert(paper.paper_id.clone());
        }
        if keys.len() > max_paper_authors {
            continue;
        }
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                g.add_edge(a, b, 1);
            }
        }
    }
    g
}

/// Connected components as sorted key sets, ordered by their smallest key.
pub fn components(graph: &CoauthorGraph) -> Vec<BTreeSet<String>> {
    let adj = graph.adjacency();
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut comp = BTreeSet::new();
        while let Some(u) = queue.pop_front() {
            comp.insert(adj.keys[u].clone());
            for &(v, _) in &adj.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// The largest connected component; ties go to the component holding the
/// smallest author key.
pub fn giant_component(graph: &CoauthorGraph) -> CoauthorGraph {
    let mut best: Option<BTreeSet<String>> = None;
    for comp in components(graph) {
        if best.as_ref().is_none_or(|b| comp.len() > b.len()) {
            best = Some(comp);
        }
    }
    match best {
        Some(members) => graph.induced(&members),
        None => CoauthorGraph::new(),
    }
}
