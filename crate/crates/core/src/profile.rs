//! Group profiles: who (authors), what (topics), where (affiliations).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::community::ClusterSet;
use crate::corpus::{CorpusSnapshot, PaperSummary};

/// A ranked value and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub name: String,
    pub score: f64,
}

/// Sorts by score descending, then name ascending.
fn sort_ranked(list: &mut [Ranked]) {
    list.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Author,
    Affiliation,
}

/// Full ranked lists for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub group_id: usize,
    pub topics: Vec<Ranked>,
    pub authors: Vec<Ranked>,
    pub affiliations: Vec<Ranked>,
    /// Newest first, then by paper id.
    pub paper_ids: Vec<String>,
    pub member_count: usize,
    pub flagged: bool,
}

/// The truncated form shown on a group card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCard {
    pub group_id: usize,
    pub topics: Vec<Ranked>,
    pub authors: Vec<Ranked>,
    pub affiliations: Vec<Ranked>,
    pub paper_count: usize,
    pub member_count: usize,
    pub top_k: usize,
}

impl GroupProfile {
    pub fn card(&self, top_k: usize) -> GroupCard {
        let take = |l: &[Ranked]| l.iter().take(top_k).cloned().collect();
        GroupCard {
            group_id: self.group_id,
            topics: take(&self.topics),
            authors: take(&self.authors),
            affiliations: take(&self.affiliations),
            paper_count: self.paper_ids.len(),
            member_count: self.member_count,
            top_k,
        }
    }
}

/// Papers from `min_year` on, indexed by author key.
pub fn recent_papers_by_author(snapshot: &CorpusSnapshot, min_year: i32) -> HashMap<&str, Vec<usize>> {
    let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, p) in snapshot.records().iter().enumerate() {
        if p.year < min_year {
            continue;
        }
        for key in p.author_keys() {
            map.entry(key).or_default().push(i);
        }
    }
    map
}

/// A group's papers: any paper from `min_year` on with at least one member
/// author, newest first then by paper id.
pub fn group_papers(
    members: &BTreeSet<String>,
    snapshot: &CorpusSnapshot,
    by_author: &HashMap<&str, Vec<usize>>,
) -> Vec<usize> {
    let set: BTreeSet<usize> = members
        .iter()
        .filter_map(|m| by_author.get(m.as_str()))
        .flatten()
        .copied()
        .collect();
    let records = snapshot.records();
    let mut papers: Vec<usize> = set.into_iter().collect();
    papers.sort_by(|&a, &b| {
        records[b]
            .year
            .cmp(&records[a].year)
            .then_with(|| records[a].paper_id.cmp(&records[b].paper_id))
    });
    papers
}

/// Topic counts (number of papers carrying the topic) within one group.
pub fn topic_counts(papers: &[usize], snapshot: &CorpusSnapshot) -> BTreeMap<String, usize> {
    let mut tf = BTreeMap::new();
    for &i in papers {
        for t in snapshot.records()[i].topic_list() {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
    }
    tf
}

/// `tf(t, g) * ln(n_groups / df(t))` where `df` counts groups using `t`.
pub fn rank_topics(tf: &BTreeMap<String, usize>, doc_freq: &BTreeMap<String, usize>, n_groups: usize) -> Vec<Ranked> {
    let mut ranked: Vec<Ranked> = tf
        .iter()
        .map(|(t, &count)| {
            let df = doc_freq.get(t).copied().unwrap_or(1).max(1);
            Ranked {
                name: t.clone(),
                score: count as f64 * (n_groups as f64 / df as f64).ln(),
            }
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked
}

/// Share of the group's papers listing each value. Authors are restricted
/// to `members` when given.
pub fn rank_entities(
    papers: &[usize],
    snapshot: &CorpusSnapshot,
    kind: EntityKind,
    members: Option<&BTreeSet<String>>,
) -> Vec<Ranked> {
    if papers.is_empty() {
        return Vec::new();
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for &i in papers {
        let paper = &snapshot.records()[i];
        let values: BTreeSet<String> = match kind {
            EntityKind::Author => paper
                .author_keys()
                .into_iter()
                .filter(|k| members.is_none_or(|m| m.contains(*k)))
                .map(str::to_string)
                .collect(),
            EntityKind::Affiliation => paper.affiliation_keys(),
        };
        for v in values {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    let n = papers.len() as f64;
    let mut ranked: Vec<Ranked> = counts
        .into_iter()
        .map(|(name, c)| Ranked {
            name,
            score: c as f64 / n,
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked
}

pub fn build_profiles(snapshot: &CorpusSnapshot, clusters: &ClusterSet, min_year: i32) -> Vec<GroupProfile> {
    let by_author = recent_papers_by_author(snapshot, min_year);
    let papers: Vec<Vec<usize>> = clusters
        .clusters()
        .iter()
        .map(|members| group_papers(members, snapshot, &by_author))
        .collect();
    let tfs: Vec<BTreeMap<String, usize>> = papers.iter().map(|p| topic_counts(p, snapshot)).collect();
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    for tf in &tfs {
        for t in tf.keys() {
            *doc_freq.entry(t.clone()).or_insert(0) += 1;
        }
    }

    clusters
        .clusters()
        .iter()
        .enumerate()
        .map(|(gid, members)| GroupProfile {
            group_id: gid,
            topics: rank_topics(&tfs[gid], &doc_freq, clusters.len()),
            authors: rank_entities(&papers[gid], snapshot, EntityKind::Author, Some(members)),
            affiliations: rank_entities(&papers[gid], snapshot, EntityKind::Affiliation, None),
            paper_ids: papers[gid]
                .iter()
                .map(|&i| snapshot.records()[i].paper_id.clone())
                .collect(),
            member_count: members.len(),
            flagged: clusters.is_flagged(gid),
        })
        .collect()
}

/// Resolves a profile's papers to summaries, preserving recency order.
pub fn profile_papers(profile: &GroupProfile, snapshot: &CorpusSnapshot) -> Vec<PaperSummary> {
    let index = snapshot.id_index();
    profile
        .paper_ids
        .iter()
        .filter_map(|id| index.get(id.as_str()))
        .map(|&i| PaperSummary::from(&snapshot.records()[i]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bridge {
    pub author: String,
    pub groups: (usize, usize),
}

/// Number of shared members for every pair of clusters that overlap, with
/// the shared authors.
pub fn pairwise_overlaps(clusters: &ClusterSet) -> BTreeMap<(usize, usize), Vec<&str>> {
    let mut shared: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for (author, ids) in clusters.membership() {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                shared.entry((a.min(b), a.max(b))).or_default().push(author.as_str());
            }
        }
    }
    shared
}

/// Authors who are the only shared member of two clusters.
pub fn find_bridges(clusters: &ClusterSet) -> Vec<Bridge> {
    let mut bridges: Vec<Bridge> = pairwise_overlaps(clusters)
        .into_iter()
        .filter(|(_, authors)| authors.len() == 1)
        .map(|(groups, authors)| Bridge {
            author: authors[0].to_string(),
            groups,
        })
        .collect();
    bridges.sort();
    bridges
}
