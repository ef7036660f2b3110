//! Overlapping communities by ego-splitting.
//!
//! Every author is replaced by one persona per connected component of their
//! ego-net (the neighbors, without the author). Each co-authorship edge
//! `(u, v)` becomes a single persona edge between the persona of `u` whose
//! component holds `v` and the persona of `v` whose component holds `u`.
//! The persona graph is partitioned with deterministic weighted label
//! propagation and the parts are mapped back to (overlapping) author sets.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coauthor::{Adjacency, CoauthorGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EgoSplitConfig {
    pub max_iters: usize,
}

impl Default for EgoSplitConfig {
    fn default() -> Self {
        Self { max_iters: 100 }
    }
}

/// Overlapping author clusters. Cluster ids are positions in `clusters`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<ClusterRecord>", into = "Vec<ClusterRecord>")]
pub struct ClusterSet {
    clusters: Vec<BTreeSet<String>>,
    flagged: Vec<bool>,
    membership: BTreeMap<String, Vec<usize>>,
}

/// Export form of one cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub cluster_id: usize,
    pub members: Vec<String>,
    pub flagged: bool,
}

impl From<Vec<ClusterRecord>> for ClusterSet {
    fn from(records: Vec<ClusterRecord>) -> Self {
        let mut records = records;
        records.sort_by_key(|r| r.cluster_id);
        Self::from_flagged(
            records
                .into_iter()
                .map(|r| (r.members.into_iter().collect(), r.flagged))
                .collect(),
        )
    }
}

impl From<ClusterSet> for Vec<ClusterRecord> {
    fn from(set: ClusterSet) -> Self {
        set.clusters
            .into_iter()
            .zip(set.flagged)
            .enumerate()
            .map(|(cluster_id, (members, flagged))| ClusterRecord {
                cluster_id,
                members: members.into_iter().collect(),
                flagged,
            })
            .collect()
    }
}

impl ClusterSet {
    /// Empty clusters are dropped.
    pub fn new(clusters: Vec<BTreeSet<String>>) -> Self {
        Self::from_flagged(clusters.into_iter().map(|c| (c, false)).collect())
    }

    fn from_flagged(clusters: Vec<(BTreeSet<String>, bool)>) -> Self {
        let (clusters, flagged): (Vec<_>, Vec<_>) = clusters.into_iter().filter(|(c, _)| !c.is_empty()).unzip();
        let mut membership: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, c) in clusters.iter().enumerate() {
            for a in c {
                membership.entry(a.clone()).or_default().push(i);
            }
        }
        Self {
            clusters,
            flagged,
            membership,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[BTreeSet<String>] {
        &self.clusters
    }

    pub fn get(&self, id: usize) -> Option<&BTreeSet<String>> {
        self.clusters.get(id)
    }

    /// True when the cluster exceeded the size cap but could not be split.
    pub fn is_flagged(&self, id: usize) -> bool {
        self.flagged.get(id).copied().unwrap_or(false)
    }

    pub fn membership(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.membership
    }

    pub fn clusters_of(&self, author: &str) -> &[usize] {
        self.membership.get(author).map_or(&[], Vec::as_slice)
    }

    pub fn records(&self) -> Vec<ClusterRecord> {
        self.clone().into()
    }
}

/// Ego-net partition of one node: the local part index of each neighbor
/// (aligned with the sorted neighbor list) and the number of parts.
fn ego_parts(adj: &Adjacency, v: usize) -> (Vec<usize>, usize) {
    let neigh = &adj.neighbors[v];
    if neigh.is_empty() {
        return (Vec::new(), 1);
    }
    let local = |u: usize| neigh.binary_search_by_key(&u, |&(x, _)| x).ok();
    let mut parent: Vec<usize> = (0..neigh.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, &(u, _)) in neigh.iter().enumerate() {
        for &(x, _) in &adj.neighbors[u] {
            if x == v {
                continue;
            }
            if let Some(j) = local(x) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    // number parts by first appearance in neighbor order
    let mut part_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut parts = Vec::with_capacity(neigh.len());
    for i in 0..neigh.len() {
        let r = find(&mut parent, i);
        let next = part_of_root.len();
        parts.push(*part_of_root.entry(r).or_insert(next));
    }
    (parts, part_of_root.len())
}

/// Persona graph: owner author index per persona, and weighted adjacency.
struct PersonaGraph {
    owner: Vec<usize>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

fn persona_graph(adj: &Adjacency) -> PersonaGraph {
    let partitions: Vec<(Vec<usize>, usize)> = (0..adj.len()).into_par_iter().map(|v| ego_parts(adj, v)).collect();

    let mut base = Vec::with_capacity(adj.len());
    let mut owner = Vec::new();
    for (v, (_, count)) in partitions.iter().enumerate() {
        base.push(owner.len());
        owner.extend(std::iter::repeat_n(v, *count));
    }

    let mut neighbors = vec![Vec::new(); owner.len()];
    for v in 0..adj.len() {
        for (i, &(u, w)) in adj.neighbors[v].iter().enumerate() {
            if u <= v {
                continue;
            }
            let pv = base[v] + partitions[v].0[i];
            let j = adj.neighbors[u]
                .binary_search_by_key(&v, |&(x, _)| x)
                .expect("adjacency is symmetric");
            let pu = base[u] + partitions[u].0[j];
            neighbors[pv].push((pu, w));
            neighbors[pu].push((pv, w));
        }
    }
    for list in &mut neighbors {
        list.sort_by_key(|&(p, _)| p);
    }
    PersonaGraph { owner, neighbors }
}

/// Asynchronous label propagation in ascending node order. A node takes the
/// label with the largest incident weight, ties to the smallest label.
/// Stops after a pass with no change or `max_iters` passes.
pub fn label_propagation(neighbors: &[Vec<(usize, f64)>], max_iters: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..neighbors.len()).collect();
    let mut weight_by_label: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..max_iters {
        let mut changed = false;
        for node in 0..neighbors.len() {
            if neighbors[node].is_empty() {
                continue;
            }
            weight_by_label.clear();
            for &(q, w) in &neighbors[node] {
                *weight_by_label.entry(labels[q]).or_insert(0.0) += w;
            }
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            // ascending label order, so strict > keeps the smallest on ties
            for (&label, &w) in &weight_by_label {
                if w > best.1 {
                    best = (label, w);
                }
            }
            if labels[node] != best.0 {
                labels[node] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

pub fn ego_split(graph: &CoauthorGraph, config: &EgoSplitConfig) -> ClusterSet {
    let adj = graph.adjacency();
    if adj.is_empty() {
        return ClusterSet::default();
    }
    let personas = persona_graph(&adj);
    let labels = label_propagation(&personas.neighbors, config.max_iters);

    let mut by_label: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (p, &label) in labels.iter().enumerate() {
        by_label.entry(label).or_default().insert(personas.owner[p]);
    }
    let mut clusters: Vec<BTreeSet<String>> = by_label
        .into_values()
        .map(|authors| authors.into_iter().map(|a| adj.keys[a].clone()).collect())
        .collect();
    clusters.sort();
    ClusterSet::new(clusters)
}

/// Re-runs [`ego_split`] inside every cluster larger than `max_size`, until
/// all clusters fit or a cluster cannot be split further. Unsplittable
/// oversized clusters are kept and flagged.
pub fn recursive_split(
    clusters: &ClusterSet,
    graph: &CoauthorGraph,
    max_size: usize,
    config: &EgoSplitConfig,
) -> ClusterSet {
    fn split(
        members: &BTreeSet<String>,
        graph: &CoauthorGraph,
        max_size: usize,
        config: &EgoSplitConfig,
        out: &mut Vec<(BTreeSet<String>, bool)>,
    ) {
        if members.len() <= max_size {
            out.push((members.clone(), false));
            return;
        }
        let parts = ego_split(&graph.induced(members), config);
        for part in parts.clusters() {
            if part == members {
                log::warn!("cluster of {} authors cannot be split further", members.len());
                out.push((part.clone(), true));
            } else {
                split(part, graph, max_size, config, out);
            }
        }
    }

    let mut out = Vec::new();
    for members in clusters.clusters() {
        split(members, graph, max_size, config, &mut out);
    }
    ClusterSet::from_flagged(out)
}

/// Number of clusters per author → number of authors with that many.
pub fn membership_stats(clusters: &ClusterSet) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for ids in clusters.membership().values() {
        *hist.entry(ids.len()).or_insert(0) += 1;
    }
    hist
}
