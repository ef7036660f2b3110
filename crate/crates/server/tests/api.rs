//! HTTP contract tests: status codes, error bodies, parameter handling,
//! replay determinism and hot reload.

mod support;

use serde_json::Value;

use litmap_core::{build_index, BuildConfig, IndexSnapshot};
use litmap_server::AppState;
use support::{sample_dir, Response, TestServer};

fn sample_snapshot(config: &BuildConfig) -> IndexSnapshot {
    let dir = sample_dir();
    build_index(dir.join("corpus.jsonl"), dir.join("gazetteer.tsv"), config).unwrap()
}

async fn server() -> TestServer {
    TestServer::start(AppState::new(sample_snapshot(&BuildConfig::default()), None)).await
}

fn bad_field(r: &Response) -> String {
    assert_eq!(r.status, 400, "{}", r.text());
    let body = r.json();
    assert_eq!(body["error"], "bad_request");
    assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()));
    body["field"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health_reports_the_index() {
    let s = server().await;
    let r = s.get("/health").await;
    assert_eq!(r.status, 200);
    let body = r.json();
    assert_eq!(body["status"], "ok");
    assert_eq!(body["digest"], s.state.digest());
    assert_eq!(body["index"]["papers"], 200);
}

#[tokio::test]
async fn bad_parameters_name_their_field() {
    let s = server().await;
    let cases = [
        ("/collocations", "term"),
        ("/collocations?term=ribavirin&k=0", "k"),
        ("/collocations?term=ribavirin&k=abc", "k"),
        ("/collocations?term=a&term=b", "term"),
        ("/collocations?term=ribavirin&bogus=1", "bogus"),
        ("/collocations/papers?a=ribavirin", "b"),
        ("/papers?from=abc", "from"),
        ("/papers?from=2021&to=2019", "from"),
        ("/papers?limit=0", "limit"),
        ("/papers?intervention=%20%20", "intervention"),
        ("/papers?color=red", "color"),
        ("/groups?k=-1", "k"),
        ("/groups?topic=", "topic"),
        ("/groups?venue=x", "venue"),
        ("/groups/abc", "id"),
        ("/groups/-1/links", "id"),
    ];
    for (path, field) in cases {
        assert_eq!(bad_field(&s.get(path).await), field, "{path}");
    }
}

#[tokio::test]
async fn unknown_things_are_not_found() {
    let s = server().await;
    let r = s.get("/collocations?term=ribavirn").await;
    assert_eq!(r.status, 404);
    let body = r.json();
    assert_eq!(body["error"], "not_found");
    let suggestions: Vec<&str> = body["suggestions"].as_array().unwrap().iter().filter_map(Value::as_str).collect();
    assert!(suggestions.contains(&"ribavirin"), "{suggestions:?}");

    assert_eq!(s.get("/groups/9999").await.status, 404);
    assert_eq!(s.get("/groups/9999/links").await.status, 404);
    assert_eq!(s.get("/no/such/route").await.status, 404);
    assert_eq!(s.get("/collocations/papers?a=ribavirin&b=zzzz").await.status, 404);
}

#[tokio::test]
async fn collocation_terms_resolve_case_insensitively() {
    let s = server().await;
    let lower = s.get("/collocations?term=ribavirin&k=3").await;
    let upper = s.get("/collocations?term=RIBAVIRIN&k=3").await;
    assert_eq!(lower.status, 200);
    assert_eq!(lower.body, upper.body);
    let body = lower.json();
    // the term plus at most k neighbors; edges among the neighbors are included
    let nodes = body["nodes"].as_array().unwrap();
    assert!(nodes.len() <= 4 && nodes.len() >= 2);
    let n = nodes.len();
    let edges = body["edges"].as_array().unwrap();
    assert!(edges.len() >= n - 1 && edges.len() <= n * (n - 1) / 2);
}

#[tokio::test]
async fn repeated_facet_values_are_a_disjunction() {
    let s = server().await;
    let total = |r: Response| r.json()["total"].as_u64().unwrap();
    let a = total(s.get("/papers?intervention=ribavirin").await);
    let b = total(s.get("/papers?intervention=chloroquine").await);
    let either = total(s.get("/papers?intervention=ribavirin&intervention=chloroquine").await);
    let both = total(s.get("/papers?intervention=ribavirin&population=immunocompromised%20patients").await);
    assert!(a > 0 && b > 0);
    assert!(either >= a.max(b) && either <= a + b);
    assert!(both <= a);

    let r = s.get("/papers?intervention=ribavirin&from=2015&to=2021&limit=2").await.json();
    assert!(r["papers"].as_array().unwrap().len() <= 2);
    let hist = r["histogram"].as_array().unwrap();
    assert_eq!(hist.len(), 7);
    assert_eq!(hist.iter().map(|h| h["count"].as_u64().unwrap()).sum::<u64>(), r["total"].as_u64().unwrap());
}

#[tokio::test]
async fn group_search_and_detail_agree() {
    let s = server().await;
    let all = s.get("/groups").await.json();
    let n = all["total"].as_u64().unwrap();
    assert_eq!(all["groups"].as_array().unwrap().len() as u64, n.min(20));

    let first = &all["groups"][0];
    let id = first["group_id"].as_u64().unwrap();
    let topic = first["card"]["topics"][0]["name"].as_str().unwrap().to_string();
    let r = s.get(&format!("/groups?topic={}", topic.replace(' ', "%20"))).await.json();
    assert!(r["candidates"].as_u64().unwrap() >= 1);
    let top = &r["groups"][0];
    assert_eq!(top["candidate"], true);
    for g in r["groups"].as_array().unwrap() {
        let sum = g["overlap"].as_f64().unwrap() + g["pr_topical"].as_f64().unwrap() + g["pr_social"].as_f64().unwrap();
        assert!((g["score"].as_f64().unwrap() - sum / 3.0).abs() < 1e-12);
    }

    let detail = s.get(&format!("/groups/{id}")).await.json();
    assert_eq!(detail["card"], first["card"]);
    assert_eq!(detail["members"].as_array().unwrap().len() as u64, first["card"]["member_count"].as_u64().unwrap());
    let links = s.get(&format!("/groups/{id}/links")).await.json();
    assert!(links["topical"].is_array() && links["social"].is_array());
    let bridges = s.get("/bridges").await.json();
    assert_eq!(bridges["count"].as_u64().unwrap() as usize, bridges["bridges"].as_array().unwrap().len());
}

#[tokio::test]
async fn replayed_requests_are_byte_identical() {
    let s = server().await;
    let paths = [
        "/collocations?term=ribavirin",
        "/papers?intervention=ribavirin&population=immunocompromised%20patients",
        "/groups?topic=virology",
        "/groups/0",
        "/groups/0/links",
        "/bridges",
    ];
    for path in paths {
        let a = s.get(path).await;
        let b = s.get(path).await;
        assert_eq!(a.status, 200, "{path}: {}", a.text());
        assert_eq!(a.body, b.body, "{path}");
    }
    // a fresh server built from the same inputs answers identically
    let t = server().await;
    for path in paths {
        assert_eq!(s.get(path).await.body, t.get(path).await.body, "{path}");
    }
}

#[tokio::test]
async fn reload_swaps_and_failures_keep_the_old_index() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.idx");
    let second = dir.path().join("b.idx");
    sample_snapshot(&BuildConfig::default()).save(&first).unwrap();
    let other = sample_snapshot(&BuildConfig {
        min_collocation: 0,
        ..BuildConfig::default()
    });
    other.save(&second).unwrap();

    let s = TestServer::start(AppState::load(&first).unwrap()).await;
    let before = s.state.digest();

    // malformed body, unknown field, missing file and a corrupt file are all 400s
    assert_eq!(bad_field(&s.post("/admin/reload", "{not json").await), "body");
    assert_eq!(bad_field(&s.post("/admin/reload", r#"{"path":"x"}"#).await), "body");
    let missing = format!(r#"{{"index_path":"{}"}}"#, dir.path().join("nope.idx").display());
    assert_eq!(bad_field(&s.post("/admin/reload", &missing).await), "index_path");
    let corrupt = dir.path().join("corrupt.idx");
    let mut bytes = std::fs::read(&second).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&corrupt, bytes).unwrap();
    let body = format!(r#"{{"index_path":"{}"}}"#, corrupt.display());
    assert_eq!(bad_field(&s.post("/admin/reload", &body).await), "index_path");
    assert_eq!(s.state.digest(), before);
    assert_eq!(s.get("/health").await.json()["digest"], before);

    let body = format!(r#"{{"index_path":"{}"}}"#, second.display());
    let r = s.post("/admin/reload", &body).await;
    assert_eq!(r.status, 200, "{}", r.text());
    assert_eq!(r.json()["digest"], other.digest());
    assert_ne!(s.state.digest(), before);
    assert_eq!(s.get("/health").await.json()["digest"], other.digest());

    // an empty body re-reads the current path
    let r = s.post("/admin/reload", "").await;
    assert_eq!(r.status, 200, "{}", r.text());
    assert_eq!(r.json()["digest"], other.digest());
}

#[tokio::test]
async fn reload_without_a_path_is_rejected_for_in_memory_state() {
    let s = server().await;
    assert_eq!(bad_field(&s.post("/admin/reload", "").await), "index_path");
}
