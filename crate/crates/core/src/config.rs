use serde::{Deserialize, Serialize};

use crate::search::PageRankConfig;

/// Every knob of the build pipeline. Echoed verbatim into the snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Papers older than this contribute nothing to the co-authorship graph.
    pub min_year: i32,
    pub min_collocation: u32,
    /// Papers with more authors contribute nodes but no co-authorship edges.
    pub max_paper_authors: usize,
    pub max_cluster_size: usize,
    pub k_link: usize,
    /// Card truncation depth.
    pub top_k: usize,
    pub label_propagation_max_iters: usize,
    pub pagerank: PageRankConfig,
    pub corpus_path: Option<String>,
    pub gazetteer_path: Option<String>,
    pub embedding_file: Option<String>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            min_year: 2017,
            min_collocation: 2,
            max_paper_authors: 50,
            max_cluster_size: 120,
            k_link: 3,
            top_k: 20,
            label_propagation_max_iters: 100,
            pagerank: PageRankConfig::default(),
            corpus_path: None,
            gazetteer_path: None,
            embedding_file: None,
        }
    }
}
