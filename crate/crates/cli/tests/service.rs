use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use howire_cli::service::{router, AppState, SolidSummary, ViewSummary, VoteResponse};
use howire_core::forge::{generate_dataset, write_dataset, CurationOutcome, GenerateConfig};
use howire_core::Execution;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn roster() -> Vec<String> {
    vec!["ann".into(), "ben".into(), "cat".into()]
}

fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let config = GenerateConfig { seed: 11, solids: 3, views: 8, ..GenerateConfig::default() };
    let data = generate_dataset(&config, Execution::default()).unwrap();
    write_dataset(&data, dir.path(), Execution::default()).unwrap();
    dir
}

fn make_app(dir: &tempfile::TempDir) -> Router {
    router(Arc::new(AppState::load(dir.path(), roster()).unwrap()))
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json<T: serde::de::DeserializeOwned>(app: &Router, uri: &str) -> T {
    let (status, body) = send(app, "GET", uri, None).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

async fn vote(app: &Router, view: &str, voter: &str, keep: bool) -> VoteResponse {
    let (status, body) = send(app, "POST", &format!("/api/views/{view}/vote"), Some(serde_json::json!({"voter": voter, "keep": keep}))).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

async fn views_of(app: &Router, solid: u64) -> Vec<String> {
    let v: Vec<ViewSummary> = get_json(app, &format!("/api/solids/{solid}/views")).await;
    v.into_iter().map(|v| v.view_id).collect()
}

fn exported_views(outcome: &CurationOutcome) -> Vec<String> {
    outcome.manifests.iter().flat_map(|m| m.samples.iter().map(|s| s.sample_id.clone())).collect()
}

#[tokio::test]
async fn majority_discard_and_solid_removal() {
    let dir = dataset();
    let app = make_app(&dir);
    let solids: Vec<SolidSummary> = get_json(&app, "/api/solids").await;
    assert_eq!(solids.len(), 3);
    assert!(solids.iter().all(|s| s.view_count == s.kept_count && s.view_count > 4));

    // Solid 0: one view discarded by two voters, one view with a single discard.
    let v0 = views_of(&app, 0).await;
    vote(&app, &v0[0], "ann", false).await;
    vote(&app, &v0[0], "ben", false).await;
    vote(&app, &v0[1], "cat", false).await;

    // Solid 1: discard all but three views.
    let v1 = views_of(&app, 1).await;
    for v in &v1[3..] {
        vote(&app, v, "ann", false).await;
        vote(&app, v, "cat", false).await;
    }

    let outcome: CurationOutcome = get_json(&app, "/api/export?allow_partial=true").await;
    let kept = exported_views(&outcome);
    assert!(!kept.contains(&v0[0]));
    assert!(kept.contains(&v0[1]));
    assert!(v1.iter().all(|v| !kept.contains(v)));
    assert_eq!(outcome.removed_solids, vec![1]);

    let solids: Vec<SolidSummary> = get_json(&app, "/api/solids").await;
    assert_eq!(solids[0].kept_count, solids[0].view_count - 1);
    assert_eq!(solids[1].kept_count, 3);

    let (_, a) = send(&app, "GET", "/api/export?allow_partial=true", None).await;
    let (_, b) = send(&app, "GET", "/api/export?allow_partial=true", None).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn votes_upsert_and_persist() {
    let dir = dataset();
    let app = make_app(&dir);
    let view = views_of(&app, 2).await.remove(0);
    let first = vote(&app, &view, "ben", false).await;
    assert!(first.warning.is_none());
    let second = vote(&app, &view, "ben", true).await;
    assert!(second.warning.is_some());
    assert_eq!(second.votes, BTreeMap::from([("ben".to_string(), true)]));

    let reloaded = make_app(&dir);
    let views: Vec<ViewSummary> = get_json(&reloaded, "/api/solids/2/views").await;
    let v = views.iter().find(|v| v.view_id == view).unwrap();
    assert_eq!(v.votes, BTreeMap::from([("ben".to_string(), true)]));
}

#[tokio::test]
async fn errors() {
    let dir = dataset();
    let app = make_app(&dir);
    let (status, body) = send(&app, "POST", "/api/views/nope/vote", Some(serde_json::json!({"voter": "ann", "keep": true}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(String::from_utf8_lossy(&body).contains("unknown view"));
    let view = views_of(&app, 0).await.remove(0);
    let (status, _) = send(&app, "POST", &format!("/api/views/{view}/vote"), Some(serde_json::json!({"voter": "eve", "keep": true}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, "GET", "/api/solids/99/views", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body) = send(&app, "GET", "/api/export", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert!(!v["details"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn full_votes_export_without_partial_flag() {
    let dir = dataset();
    let app = make_app(&dir);
    for solid in 0..3 {
        for view in views_of(&app, solid).await {
            for voter in roster() {
                vote(&app, &view, &voter, true).await;
            }
        }
    }
    let outcome: CurationOutcome = get_json(&app, "/api/export").await;
    assert!(outcome.partial_views.is_empty());
    assert!(outcome.discarded_views.is_empty());
}

#[tokio::test]
async fn images() {
    let dir = dataset();
    let app = make_app(&dir);
    let view = views_of(&app, 0).await.remove(0);
    let (status, plain) = send(&app, "GET", &format!("/api/views/{view}/image.png"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&plain[..8], b"\x89PNG\r\n\x1a\n");
    let (status, overlay) = send(&app, "GET", &format!("/api/views/{view}/image.png?overlay=true"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_ne!(plain, overlay);
    let (status, _) = send(&app, "GET", "/api/views/zzz/image.png", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
