//! Faceted paper search: conjunctive across facets, disjunctive within one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_author, normalize_value, CorpusSnapshot, PaperRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Population,
    Intervention,
    Outcome,
    Author,
    Affiliation,
    Journal,
}

impl Facet {
    pub const ALL: [Facet; 6] = [
        Self::Population,
        Self::Intervention,
        Self::Outcome,
        Self::Author,
        Self::Affiliation,
        Self::Journal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Population => "population",
            Self::Intervention => "intervention",
            Self::Outcome => "outcome",
            Self::Author => "author",
            Self::Affiliation => "affiliation",
            Self::Journal => "journal",
        }
    }

    /// Normalizes a query value the same way corpus values are normalized.
    pub fn normalize(self, value: &str) -> String {
        match self {
            Self::Author => normalize_author(value),
            _ => normalize_value(value),
        }
    }

    /// The paper's normalized values for this facet.
    pub fn values_of(self, paper: &PaperRecord) -> BTreeSet<String> {
        let pio = |f: fn(&crate::corpus::FacetAnnotation) -> &Vec<String>| {
            paper
                .facets
                .as_ref()
                .map(|a| f(a).iter().cloned().collect())
                .unwrap_or_default()
        };
        match self {
            Self::Population => pio(|a| &a.population),
            Self::Intervention => pio(|a| &a.intervention),
            Self::Outcome => pio(|a| &a.outcome),
            Self::Author => paper.author_keys().into_iter().map(str::to_string).collect(),
            Self::Affiliation => paper.affiliation_keys(),
            Self::Journal => paper
                .journal
                .iter()
                .map(|j| normalize_value(j))
                .filter(|j| !j.is_empty())
                .collect(),
        }
    }
}

impl FromStr for Facet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown facet \"{s}\""))
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetQuery {
    values: BTreeMap<Facet, BTreeSet<String>>,
    year_range: Option<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("year range from {from} is after to {to}")]
pub struct InvalidYearRange {
    pub from: i32,
    pub to: i32,
}

impl FacetQuery {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a value (normalized); empty values are ignored.
    pub fn with(mut self, facet: Facet, value: &str) -> Self {
        self.add(facet, value);
        self
    }

    pub fn add(&mut self, facet: Facet, value: &str) {
        let v = facet.normalize(value);
        if !v.is_empty() {
            self.values.entry(facet).or_default().insert(v);
        }
    }

    pub fn with_years(mut self, from: i32, to: i32) -> Result<Self, InvalidYearRange> {
        self.set_years(from, to)?;
        Ok(self)
    }

    pub fn set_years(&mut self, from: i32, to: i32) -> Result<(), InvalidYearRange> {
        if from > to {
            return Err(InvalidYearRange { from, to });
        }
        self.year_range = Some((from, to));
        Ok(())
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        self.year_range
    }

    pub fn values(&self, facet: Facet) -> Option<&BTreeSet<String>> {
        self.values.get(&facet).filter(|s| !s.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.values.values().all(BTreeSet::is_empty) && self.year_range.is_none()
    }

    /// Direct predicate form of the query semantics.
    pub fn matches(&self, paper: &PaperRecord) -> bool {
        if let Some((from, to)) = self.year_range {
            if paper.year < from || paper.year > to {
                return false;
            }
        }
        self.values.iter().filter(|(_, v)| !v.is_empty()).all(|(facet, wanted)| {
            let have = facet.values_of(paper);
            wanted.iter().any(|w| have.contains(w))
        })
    }
}

/// Inverted maps from facet value to the (sorted) indexes of papers carrying it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetIndex {
    postings: BTreeMap<Facet, BTreeMap<String, Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub value: String,
    pub count: usize,
}

impl FacetIndex {
    pub fn build(snapshot: &CorpusSnapshot) -> Self {
        let mut postings: BTreeMap<Facet, BTreeMap<String, Vec<usize>>> = BTreeMap::new();
        for (i, paper) in snapshot.records().iter().enumerate() {
            for facet in Facet::ALL {
                for v in facet.values_of(paper) {
                    postings.entry(facet).or_default().entry(v).or_default().push(i);
                }
            }
        }
        Self { postings }
    }

    pub fn distinct_values(&self, facet: Facet) -> usize {
        self.postings.get(&facet).map_or(0, BTreeMap::len)
    }

    /// Indexes of matching papers, newest first then by paper id.
    pub fn matching_indexes(&self, snapshot: &CorpusSnapshot, query: &FacetQuery) -> Vec<usize> {
        let mut candidate: Option<BTreeSet<usize>> = None;
        for facet in Facet::ALL {
            let Some(wanted) = query.values(facet) else { continue };
            let empty = BTreeMap::new();
            let index = self.postings.get(&facet).unwrap_or(&empty);
            let union: BTreeSet<usize> = wanted
                .iter()
                .filter_map(|v| index.get(v))
                .flatten()
                .copied()
                .collect();
            candidate = Some(match candidate {
                None => union,
                Some(c) => c.intersection(&union).copied().collect(),
            });
        }
        let records = snapshot.records();
        let mut hits: Vec<usize> = match candidate {
            Some(c) => c.into_iter().collect(),
            None => (0..records.len()).collect(),
        };
        if let Some((from, to)) = query.year_range {
            hits.retain(|&i| (from..=to).contains(&records[i].year));
        }
        hits.sort_by(|&a, &b| {
            records[b]
                .year
                .cmp(&records[a].year)
                .then_with(|| records[a].paper_id.cmp(&records[b].paper_id))
        });
        hits
    }

    pub fn filter_papers(&self, snapshot: &CorpusSnapshot, query: &FacetQuery) -> Vec<String> {
        self.matching_indexes(snapshot, query)
            .into_iter()
            .map(|i| snapshot.records()[i].paper_id.clone())
            .collect()
    }
}

/// Matching papers per year. Inside a queried range, empty years appear with 0.
pub fn time_histogram(snapshot: &CorpusSnapshot, hits: &[usize], query: &FacetQuery) -> BTreeMap<i32, usize> {
    let mut hist = BTreeMap::new();
    if let Some((from, to)) = query.year_range {
        for y in from..=to {
            hist.insert(y, 0);
        }
    }
    for &i in hits {
        *hist.entry(snapshot.records()[i].year).or_insert(0) += 1;
    }
    hist
}

/// Per facet, the `k` values most common in the result set that are not
/// already part of the query. Ties go to the smaller value.
pub fn suggest_facets(
    snapshot: &CorpusSnapshot,
    hits: &[usize],
    query: &FacetQuery,
    k: usize,
) -> BTreeMap<Facet, Vec<Suggestion>> {
    let mut out = BTreeMap::new();
    for facet in Facet::ALL {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for &i in hits {
            for v in facet.values_of(&snapshot.records()[i]) {
                *counts.entry(v).or_insert(0) += 1;
            }
        }
        if let Some(q) = query.values(facet) {
            counts.retain(|v, _| !q.contains(v));
        }
        let ranked = top_k_counts(counts, k);
        if !ranked.is_empty() {
            out.insert(facet, ranked);
        }
    }
    out
}

/// Sorts by count descending, then value ascending, and truncates.
pub(crate) fn top_k_counts(counts: BTreeMap<String, usize>, k: usize) -> Vec<Suggestion> {
    let mut ranked: Vec<Suggestion> = counts
        .into_iter()
        .map(|(value, count)| Suggestion { value, count })
        .collect();
    // stable sort keeps the BTreeMap's ascending value order within equal counts
    ranked.sort_by_key(|s| std::cmp::Reverse(s.count));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BuildConfig;
    use crate::corpus::parse_corpus;

    fn corpus() -> CorpusSnapshot {
        let lines = [
            r#"{"paper_id":"p1","title":"a","year":2016,"authors":["Ann Lee"],"facets":{"intervention":["Ribavirin"],"population":["immunocompromised"],"outcome":["mortality"]}}"#,
            r#"{"paper_id":"p2","title":"b","year":2016,"facets":{"intervention":["chloroquine"],"population":["children"]}}"#,
            r#"{"paper_id":"p3","title":"c","year":2020,"journal":"Lancet","facets":{"intervention":["ribavirin"],"population":["immunocompromised","adults"]}}"#,
            r#"{"paper_id":"p4","title":"d","year":2016,"affiliations":["Harvard University"],"facets":{"intervention":["ribavirin"],"population":["adults"]}}"#,
            r#"{"paper_id":"p5","title":"e","year":2018}"#,
        ];
        parse_corpus(lines.join("\n").as_bytes(), &BuildConfig::default()).unwrap()
    }

    #[test]
    fn empty_query_matches_everything_newest_first() {
        let snap = corpus();
        let idx = FacetIndex::build(&snap);
        assert_eq!(idx.filter_papers(&snap, &FacetQuery::new()), vec!["p3", "p5", "p1", "p2", "p4"]);
    }

    #[test]
    fn conjunction_across_facets() {
        let snap = corpus();
        let idx = FacetIndex::build(&snap);
        let q = FacetQuery::new()
            .with(Facet::Intervention, "ribavirin")
            .with(Facet::Population, "Immunocompromised");
        assert_eq!(idx.filter_papers(&snap, &q), vec!["p3", "p1"]);
    }

    #[test]
    fn disjunction_within_facet() {
        let snap = corpus();
        let idx = FacetIndex::build(&snap);
        let q = FacetQuery::new()
            .with(Facet::Intervention, "ribavirin")
            .with(Facet::Intervention, "chloroquine");
        assert_eq!(idx.filter_papers(&snap, &q), vec!["p3", "p1", "p2", "p4"]);
    }

    #[test]
    fn metadata_facets() {
        let snap = corpus();
        let idx = FacetIndex::build(&snap);
        assert_eq!(idx.filter_papers(&snap, &FacetQuery::new().with(Facet::Author, "ANN LEE.")), vec!["p1"]);
        assert_eq!(idx.filter_papers(&snap, &FacetQuery::new().with(Facet::Journal, "lancet")), vec!["p3"]);
        assert_eq!(
            idx.filter_papers(&snap, &FacetQuery::new().with(Facet::Affiliation, " harvard  university")),
            vec!["p4"]
        );
        assert!(idx.filter_papers(&snap, &FacetQuery::new().with(Facet::Journal, "nature")).is_empty());
    }

    #[test]
    fn histogram_fills_range() {
        let snap = corpus();
        let idx = FacetIndex::build(&snap);
        let q = FacetQuery::new()
            .with(Facet::Intervention, "ribavirin")
            .with(Facet::Intervention, "chloroquine")
            .with_years(2015, 2020)
            .unwrap();
        let hits = idx.matching_indexes(&snap, &q);
        let hist = time_histogram(&snap, &hits, &q);
        assert_eq!(
            hist,
            BTreeMap::from([(2015, 0), (2016, 3), (2017, 0), (2018, 0), (2019, 0), (2020, 1)])
        );

        let narrow = q.clone().with_years(2016, 2016).unwrap();
        let narrow_hist = time_histogram(&snap, &idx.matching_indexes(&snap, &narrow), &narrow);
        for (y, c) in &narrow_hist {
            assert!(c <= &hist[y]);
        }
        assert!(FacetQuery::new().with_years(2021, 2020).is_err());

        let empty = parse_corpus(b"", &BuildConfig::default()).unwrap();
        assert!(time_histogram(&empty, &[], &FacetQuery::new()).is_empty());
    }

    #[test]
    fn suggestions_from_result_set() {
        let snap = corpus();
        let idx = FacetIndex::build(&snap);
        let q = FacetQuery::new()
            .with(Facet::Intervention, "ribavirin")
            .with(Facet::Population, "immunocompromised");
        let hits = idx.matching_indexes(&snap, &q);
        let s = suggest_facets(&snap, &hits, &q, 3);
        assert!(!s.contains_key(&Facet::Intervention));
        assert_eq!(s[&Facet::Population], vec![Suggestion { value: "adults".into(), count: 1 }]);

        let rib = FacetQuery::new().with(Facet::Intervention, "ribavirin");
        let hits = idx.matching_indexes(&snap, &rib);
        let s = suggest_facets(&snap, &hits, &rib, 1);
        // adults and immunocompromised tie at 2; the smaller value wins
        assert_eq!(s[&Facet::Population], vec![Suggestion { value: "adults".into(), count: 2 }]);

        assert!(suggest_facets(&snap, &[], &rib, 5).is_empty());
    }
}
