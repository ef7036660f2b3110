//! HTTP JSON API over a loaded index snapshot.
//!
//! Every handler takes one reference to the current snapshot at the start of
//! the request and answers from it alone, so a concurrent reload never
//! produces a mixed response.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use arc_swap::ArcSwap;
use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use litmap_core::collocation::CollocationError;
use litmap_core::corpus::PaperSummary;
use litmap_core::facets::{suggest_facets, time_histogram, Facet, FacetQuery};
use litmap_core::index::{IndexError, IndexSnapshot, IndexSummary};
use litmap_core::links::{Layer, MetaEdge};
use litmap_core::profile::{profile_papers, GroupCard, Ranked};
use litmap_core::search::{rank_groups, suggest_group_facets, GroupFacet, GroupQuery, RankedGroup};

mod params;

pub use params::Params;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{field}: {message}")]
    BadRequest { field: String, message: String },
    #[error("{message}")]
    NotFound { message: String, suggestions: Vec<String> },
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn bad(field: &str, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::NotFound {
            message: message.into(),
            suggestions: Vec::new(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest { field, message } => (
                StatusCode::BAD_REQUEST,
                json!({"error": "bad_request", "field": field, "message": message}),
            ),
            ApiError::NotFound { message, suggestions } => (
                StatusCode::NOT_FOUND,
                json!({"error": "not_found", "message": message, "suggestions": suggestions}),
            ),
            ApiError::Internal(message) => (
                StatusCode::INTERNAL_SERVER_ERROR,
                json!({"error": "internal", "message": message}),
            ),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

struct Loaded {
    snapshot: IndexSnapshot,
    path: Option<PathBuf>,
    digest: String,
}

/// Shared service state: the current snapshot behind an atomic pointer, and
/// a lock that keeps reloads one at a time.
#[derive(Clone)]
pub struct AppState {
    current: Arc<ArcSwap<Loaded>>,
    reload: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(snapshot: IndexSnapshot, path: Option<PathBuf>) -> Self {
        let loaded = Loaded {
            digest: snapshot.digest(),
            snapshot,
            path,
        };
        Self {
            current: Arc::new(ArcSwap::from_pointee(loaded)),
            reload: Arc::new(Mutex::new(())),
        }
    }

    pub fn load(path: impl Into<PathBuf>) -> Result<Self, IndexError> {
        let path = path.into();
        let snapshot = IndexSnapshot::load(&path)?;
        Ok(Self::new(snapshot, Some(path)))
    }

    /// Digest of the snapshot currently being served.
    pub fn digest(&self) -> String {
        self.current.load().digest.clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/collocations", get(collocations))
        .route("/collocations/papers", get(collocation_papers))
        .route("/papers", get(papers))
        .route("/groups", get(groups))
        .route("/groups/{id}", get(group_detail))
        .route("/groups/{id}/links", get(group_links))
        .route("/bridges", get(bridges))
        .route("/admin/reload", post(reload))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("response serializes")
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let loaded = state.current.load_full();
    let summary = IndexSummary::from(&loaded.snapshot);
    Json(json!({
        "status": "ok",
        "format_version": summary.format_version,
        "digest": loaded.digest,
        "index": summary,
    }))
}

/// Resolves a term to an entity id, exactly or ignoring case.
fn resolve_term(snapshot: &IndexSnapshot, term: &str) -> Option<String> {
    let g = &snapshot.collocations;
    if g.node(term).is_some() {
        return Some(term.to_string());
    }
    let lower = term.to_lowercase();
    g.export().nodes.into_iter().map(|n| n.id).find(|id| id.to_lowercase() == lower)
}

async fn collocations(State(state): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q.as_deref(), &["term", "k"])?;
    let term = p.required("term")?;
    let k = p.usize_or("k", 10, 1)?;
    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let id = resolve_term(snap, &term).unwrap_or(term);
    match snap.collocations.related_terms(&id, k) {
        Ok(graph) => Ok(Json(json!({"term": id, "k": k, "nodes": graph.nodes, "edges": graph.edges}))),
        Err(CollocationError::UnknownTerm { term, suggestions }) => Err(ApiError::NotFound {
            message: format!("unknown term \"{term}\""),
            suggestions,
        }),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}

async fn collocation_papers(State(state): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q.as_deref(), &["a", "b"])?;
    let (a, b) = (p.required("a")?, p.required("b")?);
    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let mut ids = Vec::new();
    for (field, term) in [("a", a), ("b", b)] {
        match resolve_term(snap, &term) {
            Some(id) => ids.push(id),
            None => {
                return Err(ApiError::NotFound {
                    message: format!("{field}: unknown term \"{term}\""),
                    suggestions: snap.collocations.suggest(&term),
                })
            }
        }
    }
    match snap.collocations.papers_for_pair(&snap.corpus, &ids[0], &ids[1]) {
        Ok(papers) => Ok(Json(json!({
            "a": ids[0],
            "b": ids[1],
            "count": snap.collocations.edge(&ids[0], &ids[1]).map_or(0, |e| e.count),
            "papers": papers,
        }))),
        Err(e) => Err(ApiError::not_found(e.to_string())),
    }
}

const PAPER_PARAMS: [&str; 10] = [
    "population",
    "intervention",
    "outcome",
    "author",
    "affiliation",
    "journal",
    "from",
    "to",
    "limit",
    "k",
];

async fn papers(State(state): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q.as_deref(), &PAPER_PARAMS)?;
    let mut query = FacetQuery::new();
    for facet in Facet::ALL {
        for v in p.all(facet.as_str()) {
            if facet.normalize(v).is_empty() {
                return Err(ApiError::bad(facet.as_str(), "value is empty after normalization"));
            }
            query.add(facet, v);
        }
    }
    let from = p.i32_opt("from")?;
    let to = p.i32_opt("to")?;
    if from.is_some() || to.is_some() {
        let from = from.unwrap_or(i32::MIN);
        let to = to.unwrap_or(i32::MAX);
        query
            .set_years(from, to)
            .map_err(|e| ApiError::bad("from", e.to_string()))?;
    }
    let limit = p.usize_or("limit", 50, 1)?;
    let k = p.usize_or("k", 5, 1)?;

    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let hits = snap.facets.matching_indexes(&snap.corpus, &query);
    // open-ended ranges would zero-fill billions of years; clamp to the data
    let histogram_query = match query.year_range() {
        Some((f, t)) if f == i32::MIN || t == i32::MAX => {
            let years = snap.corpus.records().iter().map(|r| r.year);
            let lo = if f == i32::MIN { years.clone().min().unwrap_or(0) } else { f };
            let hi = if t == i32::MAX { years.max().unwrap_or(0) } else { t };
            FacetQuery::new().with_years(lo, hi.max(lo)).unwrap_or_default()
        }
        _ => query.clone(),
    };
    let histogram: Vec<Value> = time_histogram(&snap.corpus, &hits, &histogram_query)
        .into_iter()
        .map(|(year, count)| json!({"year": year, "count": count}))
        .collect();
    let suggestions = suggest_facets(&snap.corpus, &hits, &query, k);
    let papers: Vec<PaperSummary> = hits
        .iter()
        .take(limit)
        .map(|&i| PaperSummary::from(&snap.corpus.records()[i]))
        .collect();
    Ok(Json(json!({
        "total": hits.len(),
        "papers": papers,
        "histogram": histogram,
        "suggestions": suggestions,
    })))
}

#[derive(Serialize)]
struct GroupHit<'a> {
    rank: usize,
    #[serde(flatten)]
    scores: &'a RankedGroup,
    card: &'a GroupCard,
}

async fn groups(State(state): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q.as_deref(), &["topic", "author", "affiliation", "k"])?;
    let mut query = GroupQuery::new();
    for (name, facet) in [
        ("topic", GroupFacet::Topic),
        ("author", GroupFacet::Author),
        ("affiliation", GroupFacet::Affiliation),
    ] {
        for v in p.all(name) {
            if facet.normalize(v).is_empty() {
                return Err(ApiError::bad(name, "value is empty after normalization"));
            }
            query.add(facet, v);
        }
    }
    let k = p.usize_or("k", 20, 1)?;
    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let ranked = rank_groups(&query, &snap.cards, &snap.pageranks);
    let shown: Vec<&RankedGroup> = ranked.iter().take(k).collect();
    let ids: Vec<usize> = shown.iter().map(|g| g.group_id).collect();
    let hits: Vec<GroupHit> = shown
        .iter()
        .enumerate()
        .map(|(i, g)| GroupHit {
            rank: i + 1,
            scores: g,
            card: &snap.cards[g.group_id],
        })
        .collect();
    Ok(Json(json!({
        "query": query,
        "total": ranked.len(),
        "candidates": ranked.iter().filter(|g| g.candidate).count(),
        "groups": hits,
        "edges": snap.meta.among(&ids),
        "suggestions": suggest_group_facets(&query, &ranked, &snap.cards, 5),
    })))
}

fn group_id(raw: &str, snap: &IndexSnapshot) -> Result<usize, ApiError> {
    let id: usize = raw
        .parse()
        .map_err(|_| ApiError::bad("id", format!("expected a non-negative integer, got \"{raw}\"")))?;
    if id >= snap.cards.len() {
        return Err(ApiError::not_found(format!(
            "no group {id} (index has {} groups)",
            snap.cards.len()
        )));
    }
    Ok(id)
}

async fn group_detail(State(state): State<AppState>, Path(raw): Path<String>) -> ApiResult {
    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let id = group_id(&raw, snap)?;
    let profile = &snap.profiles[id];
    let members: Vec<&String> = snap.clusters.clusters()[id].iter().collect();
    Ok(Json(json!({
        "group_id": id,
        "card": snap.cards[id],
        "flagged": profile.flagged,
        "members": members,
        "lists": {
            "topics": profile.topics,
            "authors": profile.authors,
            "affiliations": profile.affiliations,
        },
        "papers": profile_papers(profile, &snap.corpus),
    })))
}

async fn group_links(State(state): State<AppState>, Path(raw): Path<String>) -> ApiResult {
    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let id = group_id(&raw, snap)?;
    let edges = snap.meta.incident(id);
    let layer = |l: Layer| -> Vec<Value> {
        edges
            .iter()
            .filter(|e| e.layer == l)
            .map(|e: &MetaEdge| {
                let other = if e.a == id { e.b } else { e.a };
                json!({"group_id": other, "weight": e.weight})
            })
            .collect()
    };
    Ok(Json(json!({
        "group_id": id,
        "topical": layer(Layer::Topical),
        "social": layer(Layer::Social),
        "has_topic_vector": !snap.meta.no_vector.contains(&id),
    })))
}

async fn bridges(State(state): State<AppState>) -> Json<Value> {
    let loaded = state.current.load_full();
    let snap = &loaded.snapshot;
    let list: Vec<Value> = snap
        .bridges
        .iter()
        .map(|b| {
            let top = |g: usize| -> Vec<&Ranked> { snap.cards[g].topics.iter().take(3).collect() };
            json!({
                "author": b.author,
                "groups": [b.groups.0, b.groups.1],
                "topics": [top(b.groups.0), top(b.groups.1)],
            })
        })
        .collect();
    Json(json!({"count": list.len(), "bridges": list, "membership": to_json(&snap.membership)}))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReloadRequest {
    index_path: Option<PathBuf>,
}

async fn reload(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: ReloadRequest = if body.iter().all(u8::is_ascii_whitespace) {
        ReloadRequest { index_path: None }
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad("body", e.to_string()))?
    };
    let _guard = state.reload.lock().await;
    let path = match req.index_path.or_else(|| state.current.load().path.clone()) {
        Some(p) => p,
        None => return Err(ApiError::bad("index_path", "required: the served index was not loaded from a file")),
    };
    let load_path = path.clone();
    let snapshot = tokio::task::spawn_blocking(move || IndexSnapshot::load(&load_path))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::bad("index_path", e.to_string()))?;
    let loaded = Loaded {
        digest: snapshot.digest(),
        snapshot,
        path: Some(path.clone()),
    };
    let digest = loaded.digest.clone();
    let format_version = loaded.snapshot.format_version;
    state.current.store(Arc::new(loaded));
    log::info!("reloaded index from {}", path.display());
    Ok(Json(json!({
        "status": "reloaded",
        "index_path": path,
        "format_version": format_version,
        "digest": digest,
    })))
}
