//! Shared fixtures for the server test targets: random corpus generators
//! with known ground truth, brute-force oracles, and a minimal HTTP client.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

use litmap_server::{router, AppState};

pub fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

// ---------------------------------------------------------------------------
// Collocation ground truth

/// A random gazetteer entity: one canonical id with one or two surfaces.
pub struct Entity {
    pub id: String,
    pub ty: &'static str,
    pub surfaces: Vec<String>,
}

pub struct CollocationCase {
    pub jsonl: String,
    pub gazetteer_tsv: String,
    /// Per paper id, per sentence, the canonical ids the sentence mentions.
    pub truth: BTreeMap<String, Vec<BTreeSet<String>>>,
}

const TYPES: [&str; 5] = ["protein", "gene", "cell", "drug", "disease"];
const FILLER: [&str; 12] = [
    "we", "observed", "strong", "signals", "between", "samples", "across", "cohorts", "under", "treatment", "while",
    "controls",
];
const OPENERS: [&str; 6] = ["Results", "We", "Further", "Here", "Overall", "Notably"];

fn syllable_word<R: Rng>(rng: &mut R, used: &mut BTreeSet<String>) -> String {
    const SYL: [&str; 12] = ["ka", "zo", "ri", "mu", "te", "xa", "lo", "pe", "qu", "vi", "no", "sy"];
    loop {
        let n = rng.random_range(2..=3);
        let w: String = (0..n).map(|_| *SYL.choose(rng).unwrap()).collect();
        let w = format!("{w}{}", rng.random_range(0..10));
        if used.insert(w.clone()) {
            return w;
        }
    }
}

fn random_case<R: Rng>(rng: &mut R, s: &str) -> String {
    match rng.random_range(0..3) {
        0 => s.to_string(),
        1 => s.to_uppercase(),
        _ => {
            let mut c = s.chars();
            c.next()
                .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
                .unwrap_or_default()
        }
    }
}

/// A corpus of at most `max_papers` papers over at most `max_entities`
/// entities. Every surface consists of words used nowhere else, so the
/// inserted mentions are exactly what a correct tagger must find.
pub fn collocation_case<R: Rng>(rng: &mut R, max_papers: usize, max_entities: usize) -> CollocationCase {
    let mut used: BTreeSet<String> = FILLER.iter().chain(&OPENERS).map(|s| s.to_lowercase()).collect();
    let n_entities = rng.random_range(2..=max_entities);
    let entities: Vec<Entity> = (0..n_entities)
        .map(|i| {
            let n_surfaces = rng.random_range(1..=2);
            let surfaces = (0..n_surfaces)
                .map(|_| {
                    let words = rng.random_range(1..=2);
                    (0..words).map(|_| syllable_word(rng, &mut used)).collect::<Vec<_>>().join(" ")
                })
                .collect();
            Entity {
                id: format!("ent-{i}"),
                ty: TYPES[rng.random_range(0..TYPES.len())],
                surfaces,
            }
        })
        .collect();
    let mut gazetteer_tsv = String::from("# surface\tid\ttype\n");
    for e in &entities {
        for s in &e.surfaces {
            gazetteer_tsv.push_str(&format!("{s}\t{}\t{}\n", e.id, e.ty));
        }
    }

    let n_papers = rng.random_range(1..=max_papers);
    let mut lines = Vec::new();
    let mut truth = BTreeMap::new();
    for p in 0..n_papers {
        let paper_id = format!("c{p:03}");
        // a minority of papers carry precomputed annotations over a subset of entities
        let precomputed: Option<Vec<&Entity>> = rng.random_bool(0.15).then(|| {
            entities
                .iter()
                .filter(|_| rng.random_bool(0.5))
                .collect()
        });
        let sentence = |rng: &mut R, opener: Option<&str>| -> (String, BTreeSet<String>) {
            let mut words: Vec<String> = Vec::new();
            if let Some(o) = opener {
                words.push(o.to_string());
            }
            let mut ids = BTreeSet::new();
            let n_mentions = rng.random_range(0..=4);
            for _ in 0..n_mentions {
                for _ in 0..rng.random_range(0..=2) {
                    words.push(FILLER.choose(rng).unwrap().to_string());
                }
                let e = entities.choose(rng).unwrap();
                let surface = e.surfaces.choose(rng).unwrap();
                let text = random_case(rng, surface);
                let tagged = match &precomputed {
                    Some(list) => list.iter().any(|x| x.id == e.id),
                    None => true,
                };
                if tagged {
                    ids.insert(e.id.clone());
                }
                // punctuation glued to a mention must not hide it
                words.push(if rng.random_bool(0.2) { format!("{text},") } else { text });
            }
            words.push(FILLER.choose(rng).unwrap().to_string());
            (words.join(" "), ids)
        };

        let (title, title_ids) = sentence(rng, None);
        let mut sentence_truth = vec![title_ids];
        let mut abstract_parts = Vec::new();
        for _ in 0..rng.random_range(0..=4) {
            let opener = *OPENERS.choose(rng).unwrap();
            let (s, ids) = sentence(rng, Some(opener));
            // "Fig. 2" inside a sentence must not split it
            let s = if rng.random_bool(0.2) { format!("{s} as in Fig. 2 here") } else { s };
            abstract_parts.push(format!("{s}."));
            sentence_truth.push(ids);
        }
        // the title must be non-empty for the record to validate
        let title = if title.trim().is_empty() { "untitled".to_string() } else { title };
        let mut record = json!({
            "paper_id": paper_id,
            "title": title,
            "abstract": abstract_parts.join(" "),
            "year": rng.random_range(2010..=2021),
            "authors": ["Test Author"],
        });
        if let Some(list) = &precomputed {
            let ann: Vec<Value> = list
                .iter()
                .flat_map(|e| {
                    e.surfaces
                        .iter()
                        .map(move |s| json!({"text": s, "id": e.id, "type": e.ty}))
                })
                .collect();
            record["entities"] = Value::Array(ann);
        }
        lines.push(record.to_string());
        truth.insert(paper_id, sentence_truth);
    }
    CollocationCase {
        jsonl: lines.join("\n"),
        gazetteer_tsv,
        truth,
    }
}

/// Brute-force pair enumeration over ground-truth sentence entity sets:
/// pair → (sentence count, supporting papers).
pub fn oracle_collocations(
    truth: &BTreeMap<String, Vec<BTreeSet<String>>>,
) -> BTreeMap<(String, String), (u32, BTreeSet<String>)> {
    let mut out: BTreeMap<(String, String), (u32, BTreeSet<String>)> = BTreeMap::new();
    for (paper, sentences) in truth {
        for ids in sentences {
            for a in ids {
                for b in ids {
                    if a < b {
                        let e = out.entry((a.clone(), b.clone())).or_default();
                        e.0 += 1;
                        e.1.insert(paper.clone());
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Facet ground truth

pub struct FacetPaper {
    pub paper_id: String,
    pub year: i32,
    /// facet name → raw values as written in the corpus
    pub values: BTreeMap<&'static str, Vec<String>>,
}

const POPULATIONS: [&str; 5] = ["Adults", "children", "immunocompromised patients", "older  adults", "healthcare workers"];
const INTERVENTIONS: [&str; 5] = ["ribavirin", "Remdesivir", "chloroquine", "vaccination", "convalescent plasma"];
const OUTCOMES: [&str; 4] = ["mortality", "viral load", "ICU admission", "incidence"];
const AUTHORS: [&str; 6] = ["Ann Lee", "Bo Chen", "Carla M. Diaz", "Dev Patel", "Eva Novak", "O'Neil, Finn"];
const AFFILIATIONS: [&str; 4] = ["MIT", "Harvard University", "Institut Pasteur", "Mayo Clinic"];
const JOURNALS: [&str; 3] = ["Lancet", "Nature", "JAMA"];

pub fn facet_pool(facet: &str) -> &'static [&'static str] {
    match facet {
        "population" => &POPULATIONS,
        "intervention" => &INTERVENTIONS,
        "outcome" => &OUTCOMES,
        "author" => &AUTHORS,
        "affiliation" => &AFFILIATIONS,
        "journal" => &JOURNALS,
        _ => unreachable!(),
    }
}

pub const FACETS: [&str; 6] = ["population", "intervention", "outcome", "author", "affiliation", "journal"];

pub fn facet_corpus<R: Rng>(rng: &mut R) -> (String, Vec<FacetPaper>) {
    let n = rng.random_range(1..=40);
    let mut papers = Vec::new();
    let mut lines = Vec::new();
    for p in 0..n {
        let mut values: BTreeMap<&'static str, Vec<String>> = BTreeMap::new();
        for facet in FACETS {
            let pool = facet_pool(facet);
            let max = if facet == "journal" { 1 } else { 3 };
            let k = rng.random_range(0..=max);
            let picked: Vec<String> = pool.choose_multiple(rng, k).map(|s| s.to_string()).collect();
            values.insert(facet, picked);
        }
        let year = rng.random_range(2014..=2021);
        let paper_id = format!("f{p:03}");
        let mut record = json!({
            "paper_id": paper_id,
            "title": "t",
            "year": year,
            "authors": values["author"],
            "affiliations": values["affiliation"],
            "facets": {
                "population": values["population"],
                "intervention": values["intervention"],
                "outcome": values["outcome"],
            },
        });
        if let Some(j) = values["journal"].first() {
            record["journal"] = json!(j);
        }
        lines.push(record.to_string());
        papers.push(FacetPaper { paper_id, year, values });
    }
    (lines.join("\n"), papers)
}

/// Oracle-side normalization, written independently of the library:
/// lowercase, collapse whitespace; author names additionally drop
/// punctuation.
pub fn oracle_norm(facet: &str, v: &str) -> String {
    let v = v.to_lowercase();
    let v: String = if facet == "author" {
        v.chars().map(|c| if c.is_ascii_punctuation() { ' ' } else { c }).collect()
    } else {
        v
    };
    v.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub struct OracleQuery {
    pub values: BTreeMap<&'static str, BTreeSet<String>>,
    pub years: Option<(i32, i32)>,
}

pub fn random_facet_query<R: Rng>(rng: &mut R) -> OracleQuery {
    let mut values = BTreeMap::new();
    for facet in FACETS {
        if rng.random_bool(0.35) {
            let pool = facet_pool(facet);
            let k = rng.random_range(1..=2);
            values.insert(facet, pool.choose_multiple(rng, k).map(|s| s.to_string()).collect());
        }
    }
    let years = rng.random_bool(0.3).then(|| {
        let a = rng.random_range(2013..=2022);
        let b = rng.random_range(a..=2022);
        (a, b)
    });
    OracleQuery { values, years }
}

/// Conjunctive across facets, disjunctive within; newest first, then id.
pub fn oracle_filter(papers: &[FacetPaper], q: &OracleQuery) -> Vec<String> {
    let mut hits: Vec<&FacetPaper> = papers
        .iter()
        .filter(|p| {
            q.values.iter().all(|(facet, wanted)| {
                let have: BTreeSet<String> = p.values[facet].iter().map(|v| oracle_norm(facet, v)).collect();
                wanted.iter().any(|w| have.contains(&oracle_norm(facet, w)))
            }) && q.years.is_none_or(|(a, b)| a <= p.year && p.year <= b)
        })
        .collect();
    hits.sort_by(|a, b| b.year.cmp(&a.year).then_with(|| a.paper_id.cmp(&b.paper_id)));
    hits.into_iter().map(|p| p.paper_id.clone()).collect()
}

// ---------------------------------------------------------------------------
// PageRank oracle

/// Dense power iteration: `x' = (1-d)/N + d (Pᵀx + dangling/N)` with
/// `P[v][u] = W[v][u] / Σ_u W[v][u]`, until the L1 change is below `tol`.
pub fn dense_pagerank(w: &[Vec<f64>], d: f64, tol: f64, max_iters: usize) -> Vec<f64> {
    let n = w.len();
    let strength: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let dangling: f64 = (0..n).filter(|&v| strength[v] == 0.0).map(|v| x[v]).sum();
        let mut next = vec![0.0; n];
        for (u, slot) in next.iter_mut().enumerate() {
            let mut inflow = 0.0;
            for v in 0..n {
                if strength[v] > 0.0 {
                    inflow += x[v] * w[v][u] / strength[v];
                }
            }
            *slot = (1.0 - d) / n as f64 + d * (inflow + dangling / n as f64);
        }
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < tol {
            break;
        }
    }
    x
}

/// Unweighted PageRank by out-degree, same stopping rule.
pub fn unweighted_pagerank(adj: &[BTreeSet<usize>], d: f64, tol: f64, max_iters: usize) -> Vec<f64> {
    let n = adj.len();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let dangling: f64 = (0..n).filter(|&v| adj[v].is_empty()).map(|v| x[v]).sum();
        let mut next = vec![(1.0 - d) / n as f64 + d * dangling / n as f64; n];
        for v in 0..n {
            let deg = adj[v].len() as f64;
            for &u in &adj[v] {
                next[u] += d * x[v] / deg;
            }
        }
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < tol {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// HTTP

pub struct TestServer {
    pub addr: SocketAddr,
    pub state: AppState,
    handle: tokio::task::JoinHandle<()>,
}

impl TestServer {
    pub async fn start(state: AppState) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").await.expect("bind");
        let addr = listener.local_addr().unwrap();
        let app = router(state.clone());
        let handle = tokio::spawn(async move {
            axum::serve(listener, app).await.expect("serve");
        });
        Self { addr, state, handle }
    }

    pub async fn get(&self, path: &str) -> Response {
        request(self.addr, "GET", path, None).await
    }

    pub async fn post(&self, path: &str, body: &str) -> Response {
        request(self.addr, "POST", path, Some(body)).await
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Response {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("invalid JSON body ({e}): {}", self.text()))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

/// One HTTP/1.1 request over a fresh connection with `Connection: close`.
pub async fn request(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> Response {
    let mut stream = TcpStream::connect(addr).await.expect("connect");
    let body = body.unwrap_or("");
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).await.unwrap();
    stream.write_all(body.as_bytes()).await.unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).await.unwrap();

    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header terminator");
    let head = String::from_utf8_lossy(&raw[..split]).into_owned();
    let mut payload = raw[split + 4..].to_vec();
    let status: u16 = head.split_whitespace().nth(1).and_then(|s| s.parse().ok()).expect("status");
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        payload = dechunk(&payload);
    }
    Response { status, body: payload }
}

fn dechunk(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    while let Some(eol) = data.windows(2).position(|w| w == b"\r\n") {
        let size = usize::from_str_radix(String::from_utf8_lossy(&data[..eol]).trim(), 16).unwrap_or(0);
        if size == 0 {
            break;
        }
        out.extend_from_slice(&data[eol + 2..eol + 2 + size]);
        data = &data[eol + 2 + size + 2..];
    }
    out
}
