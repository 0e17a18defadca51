use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use prepub_core::anchoring::{create_anchor, TextSource};
use prepub_core::testkit;
use prepub_service::{router, App, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const ADMIN: &str = "admin-secret";

struct Client {
    app: prepub_service::Shared,
}

impl Client {
    fn new(config: ServiceConfig) -> Self {
        Client {
            app: App::open(config).unwrap(),
        }
    }

    fn memory() -> Self {
        Self::new(ServiceConfig {
            admin_token: Some(ADMIN.into()),
            ..Default::default()
        })
    }

    async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let res = router(Arc::clone(&self.app)).oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let v = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
        (status, v)
    }

    async fn get(&self, uri: &str, token: Option<&str>) -> (StatusCode, Value) {
        self.call(Method::GET, uri, token, None).await
    }

    async fn post(&self, uri: &str, token: Option<&str>, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, uri, token, Some(body)).await
    }

    /// Registers a person and returns (person id, token).
    async fn person(&self, name: &str) -> (String, String) {
        let (s, v) = self.post("/persons", Some(ADMIN), json!({ "name": name })).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        let id = v["profile"]["person_id"].as_str().unwrap().to_string();
        let (s, v) = self.post("/tokens", Some(ADMIN), json!({ "person": id })).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        (id, v["token"]["token"].as_str().unwrap().to_string())
    }
}

const ABSTRACT: &str = "We estimate the elasticity of labor supply using tax reforms as natural experiments.";
const HANDLE: &str = "RePEc:abc:wpaper:1";

fn item() -> Value {
    json!({
        "handle": HANDLE,
        "title": "Labor supply",
        "abstract": ABSTRACT,
        "author_names": ["Ada Author"],
        "archive_code": "abc",
        "kind": "paper",
    })
}

fn comment_on(quote_start: usize, quote_end: usize, body: &str) -> Value {
    let handle = prepub_core::redif::validate_handle(HANDLE).unwrap();
    let anchor = create_anchor(ABSTRACT, quote_start, quote_end, handle, TextSource::Abstract).unwrap();
    json!({ "kind": "comment", "anchor": anchor, "body": body })
}

#[tokio::test]
async fn tokens_gate_writes() {
    let c = Client::memory();
    let (s, v) = c.post("/items", None, json!({ "items": [item()] })).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_eq!(v["error"], "Unauthorized");
    let (s, _) = c.post("/items", Some("nope"), json!({ "items": [item()] })).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (_, tok) = c.person("Ada").await;
    let (s, v) = c.post("/items", Some(&tok), json!({ "items": [item()] })).await;
    assert_eq!(s, StatusCode::FORBIDDEN, "{v}");
    let (s, v) = c.post("/items", Some(ADMIN), json!({ "items": [item()] })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["outcomes"], json!(["created"]));
    let (s, _) = c.get("/items/RePEc:abc:wpaper:1", None).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = c.get("/items/bogus", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedHandle");
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let c = Client::memory();
    let (_, tok) = c.person("Ada").await;
    let (s, v) = c.post("/outputs", Some(&tok), json!({ "kind": "comment" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
    assert!(v["detail"].is_string());
    let (s, v) = c.get("/notifications?state=sideways", Some(&tok)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn claims_are_self_service_only() {
    let c = Client::memory();
    c.post("/items", Some(ADMIN), json!({ "items": [item()] })).await;
    let (ada, ada_tok) = c.person("Ada").await;
    let (_, bob_tok) = c.person("Bob").await;
    let (s, _) = c.post(&format!("/persons/{ada}/claims"), Some(&bob_tok), json!({ "handle": HANDLE })).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, _) = c.post(&format!("/persons/{ada}/claims"), Some(&ada_tok), json!({ "handle": HANDLE })).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, v) = c.post(&format!("/persons/{ada}/claims"), Some(&ada_tok), json!({ "handle": HANDLE })).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "DuplicateClaim");
}

#[tokio::test]
async fn conversation_round_trip() {
    let c = Client::memory();
    c.post("/items", Some(ADMIN), json!({ "items": [item()] })).await;
    let (ada, ada_tok) = c.person("Ada").await;
    let (bob, bob_tok) = c.person("Bob").await;
    let (_, carol_tok) = c.person("Carol").await;
    c.post(&format!("/persons/{ada}/claims"), Some(&ada_tok), json!({ "handle": HANDLE })).await;

    let (s, v) = c.post("/outputs", Some(&bob_tok), comment_on(13, 34, "Which reforms?")).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let comment_id = v["output"]["output_id"].as_str().unwrap().to_string();
    assert_eq!(v["notifications"].as_array().unwrap().len(), 1);

    let (s, inbox) = c.get("/notifications?state=pending", Some(&ada_tok)).await;
    assert_eq!(s, StatusCode::OK);
    let entries = inbox.as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["event"]["actor"], bob);
    let nid = entries[0]["notification"]["notification_id"].as_str().unwrap().to_string();

    let (s, v) = c.post("/threads", Some(&ada_tok), json!({ "notification_id": nid, "first_message": "See section 3." })).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let tid = v["thread"]["thread_id"].as_str().unwrap().to_string();

    let (s, v) = c.post(&format!("/outputs/{comment_id}/revise"), Some(&bob_tok), comment_on(13, 34, "Which reforms, and when?")).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let revised = v["output"]["output_id"].as_str().unwrap().to_string();
    let (s, v) = c.post(&format!("/outputs/{comment_id}/revise"), Some(&bob_tok), comment_on(13, 34, "again")).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "StaleVersion");

    let (s, v) = c
        .post(
            &format!("/threads/{tid}/messages"),
            Some(&bob_tok),
            json!({ "body": "Revised.", "attached_output": { "kind": "micro", "id": revised } }),
        )
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");

    let (s, v) = c
        .post(&format!("/threads/{tid}/offers"), Some(&carol_tok), json!({ "offered": { "kind": "item", "id": HANDLE }, "note": "mine is better" }))
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let (s, _) = c
        .post(&format!("/threads/{tid}/offers"), Some(&bob_tok), json!({ "offered": { "kind": "item", "id": HANDLE } }))
        .await;
    assert_eq!(s, StatusCode::FORBIDDEN);

    let (s, v) = c.get(&format!("/threads/{tid}"), None).await;
    assert_eq!(s, StatusCode::OK);
    // opener, reply, and the offer note
    assert_eq!(v["thread"]["messages"].as_array().unwrap().len(), 3);
    assert_eq!(v["offers"].as_array().unwrap().len(), 1);

    let (s, v) = c.get(&format!("/outputs/{comment_id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["superseded_by"], revised);

    let (_, mine) = c.get(&format!("/persons/{bob}/portrait"), Some(&bob_tok)).await;
    assert!(mine.get("private_counts").is_some());
    let (_, public) = c.get(&format!("/persons/{bob}/portrait"), None).await;
    assert!(public.get("private_counts").is_none());
    assert_eq!(public["created_counts"]["comment"], 1);
    let (_, ada_portrait) = c.get(&format!("/persons/{ada}/portrait"), None).await;
    assert_eq!(ada_portrait["notifications_responded"], 1);

    let (_, n) = c.get(&format!("/persons/{ada}/neighbors?max=5"), None).await;
    assert_eq!(n["downstream"][0]["person_id"], bob);

    let (s, v) = c
        .post("/aggregations", Some(&ada_tok), json!({ "title": "Reading list", "members": [{ "kind": "item", "id": HANDLE }, { "kind": "micro", "id": revised }] }))
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let agg = v["aggregation"]["aggregation_id"].as_str().unwrap().to_string();
    let (s, text) = c.get(&format!("/aggregations/{agg}/export?format=text"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(text.as_str().unwrap().contains("Reading list"));
    let (s, _) = c.get(&format!("/aggregations/{agg}/export?format=pdf"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, v) = c.post(&format!("/notifications/{nid}/read"), Some(&ada_tok), json!({})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, v) = c.get("/integrity", None).await;
    assert_eq!(v, json!([]));
}

#[tokio::test]
async fn private_outputs_stay_hidden_until_published() {
    let c = Client::memory();
    c.post("/items", Some(ADMIN), json!({ "items": [item()] })).await;
    let (ada, ada_tok) = c.person("Ada").await;
    let (_, bob_tok) = c.person("Bob").await;
    c.post(&format!("/persons/{ada}/claims"), Some(&ada_tok), json!({ "handle": HANDLE })).await;
    let mut body = comment_on(0, 11, "draft");
    body["visibility"] = json!("private");
    let (_, v) = c.post("/outputs", Some(&bob_tok), body).await;
    let id = v["output"]["output_id"].as_str().unwrap().to_string();
    assert_eq!(c.get(&format!("/outputs/{id}"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(c.get(&format!("/outputs/{id}"), Some(&bob_tok)).await.0, StatusCode::OK);
    let (_, listed) = c.get(&format!("/items/{HANDLE}/outputs"), None).await;
    assert_eq!(listed, json!([]));
    assert_eq!(c.get("/notifications", Some(&ada_tok)).await.1, json!([]));

    let (s, _) = c.post(&format!("/outputs/{id}/publish"), Some(&ada_tok), json!({})).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, v) = c.post(&format!("/outputs/{id}/publish"), Some(&bob_tok), json!({})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(c.get("/notifications", Some(&ada_tok)).await.1.as_array().unwrap().len(), 1);
    assert_eq!(c.get(&format!("/items/{HANDLE}/outputs"), None).await.1.as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_writes_are_all_journaled() {
    let c = Arc::new(Client::memory());
    c.post("/items", Some(ADMIN), json!({ "items": [item()] })).await;
    let mut tokens = Vec::new();
    for i in 0..8 {
        tokens.push(c.person(&format!("P{i}")).await.1);
    }
    let mut tasks = Vec::new();
    for tok in tokens {
        let c = Arc::clone(&c);
        tasks.push(tokio::spawn(async move {
            for k in 0..10 {
                let (s, v) = c.post("/outputs", Some(&tok), comment_on(0, 11, &format!("c{k}"))).await;
                assert_eq!(s, StatusCode::CREATED, "{v}");
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (outputs, records) = c.app.read(|s| (s.state().outputs().len(), s.records().len()));
    assert_eq!(outputs, 80);
    // 1 item upsert + 8 persons + 8 tokens + 80 outputs
    assert_eq!(records, 97);
    let replayed = prepub_core::Store::replay(Default::default(), &c.app.read(|s| s.records().to_vec())).unwrap();
    assert_eq!(
        replayed.state().to_canonical_json(),
        c.app.state(|s| s.to_canonical_json())
    );
}

#[tokio::test]
async fn file_backed_state_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        admin_token: Some(ADMIN.into()),
        data_dir: Some(dir.path().to_path_buf()),
        snapshot_every: 3,
        ..Default::default()
    };
    let (ada, tok, before) = {
        let c = Client::new(config.clone());
        c.post("/items", Some(ADMIN), json!({ "items": [item()] })).await;
        let (ada, tok) = c.person("Ada").await;
        c.post(&format!("/persons/{ada}/claims"), Some(&tok), json!({ "handle": HANDLE })).await;
        c.post("/outputs", Some(&tok), comment_on(0, 11, "note")).await;
        (ada, tok, c.app.state(|s| s.to_canonical_json()))
    };
    assert!(dir.path().join(prepub_core::store::SNAPSHOT_FILE).exists());
    let c = Client::new(config);
    assert_eq!(c.app.state(|s| s.to_canonical_json()), before);
    // Issued tokens are journaled too.
    let (s, v) = c.get(&format!("/persons/{ada}/portrait"), Some(&tok)).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v.get("private_counts").is_some());
}

#[tokio::test]
async fn harvest_from_a_local_archive() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = testkit::rng(5);
    std::fs::write(dir.path().join("a.rdf"), prepub_core::redif::serialize_redif(&testkit::random_archive(&mut rng, "zz", 12))).unwrap();
    let c = Client::memory();
    let body = json!({ "archive_code": "zz", "base_url": dir.path().to_str().unwrap() });
    let (s, first) = c.post("/harvest", Some(ADMIN), body.clone()).await;
    assert_eq!(s, StatusCode::OK, "{first}");
    assert_eq!(first["items_created"], 12);
    let records = c.app.read(|s| s.records().len());
    let (_, second) = c.post("/harvest", Some(ADMIN), body).await;
    assert_eq!(second["items_unchanged"], 12);
    assert_eq!(c.app.read(|s| s.records().len()), records);
    let (s, v) = c.post("/harvest", Some(ADMIN), json!({ "archive_code": "zz", "base_url": "/no/such/dir" })).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY, "{v}");
    assert_eq!(c.get("/items?limit=5", None).await.1["items"].as_array().unwrap().len(), 5);
}
