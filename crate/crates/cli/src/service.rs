//! HTTP service backing the curation frontend.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use howire_core::forge::curation::{apply_curation, view_survives, CurationLog, Vote};
use howire_core::forge::io::IMAGE_FILE;
use howire_core::forge::overlay::overlay_png;
use howire_core::forge::{load_sample, read_manifest, DatasetManifest, ForgeError, ManifestEntry, TEST_SPLIT, TRAIN_SPLIT};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

pub const VOTES_FILE: &str = "curation_votes.jsonl";

struct ViewRecord {
    split_dir: PathBuf,
    entry: ManifestEntry,
}

pub struct AppState {
    manifests: Vec<DatasetManifest>,
    views: BTreeMap<String, ViewRecord>,
    roster: Vec<String>,
    log_path: PathBuf,
    /// Serializes writers; the file is the source of truth.
    log: Mutex<CurationLog>,
}

/// Splits present under `data_root`, in train/test order.
pub fn load_manifests(data_root: &Path) -> Result<Vec<(PathBuf, DatasetManifest)>, ForgeError> {
    let mut out = Vec::new();
    for split in [TRAIN_SPLIT, TEST_SPLIT] {
        let dir = data_root.join(split);
        if dir.join(howire_core::forge::io::MANIFEST_FILE).exists() {
            out.push((dir.clone(), read_manifest(&dir)?));
        }
    }
    if out.is_empty() {
        return Err(ForgeError::Io {
            path: data_root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no split manifest found"),
        });
    }
    Ok(out)
}

impl AppState {
    pub fn load(data_root: &Path, roster: Vec<String>) -> Result<Self, ForgeError> {
        howire_core::forge::curation::validate_roster(&roster)?;
        let splits = load_manifests(data_root)?;
        let mut views = BTreeMap::new();
        for (dir, m) in &splits {
            for e in &m.samples {
                views.insert(e.sample_id.clone(), ViewRecord { split_dir: dir.clone(), entry: e.clone() });
            }
        }
        let log_path = data_root.join(VOTES_FILE);
        let log = CurationLog::read_jsonl(&log_path)?;
        Ok(Self {
            manifests: splits.into_iter().map(|(_, m)| m).collect(),
            views,
            roster,
            log_path,
            log: Mutex::new(log),
        })
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    details: Vec<String>,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ApiError { error: message.into(), details: Vec::new() })).into_response()
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SolidSummary {
    pub solid_id: u64,
    pub view_count: usize,
    pub kept_count: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ViewSummary {
    pub view_id: String,
    pub votes: BTreeMap<String, bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteRequest {
    pub voter: String,
    pub keep: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VoteResponse {
    pub view_id: String,
    pub votes: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

async fn list_solids(State(state): State<Arc<AppState>>) -> Json<Vec<SolidSummary>> {
    let log = state.log.lock().await;
    let mut out: BTreeMap<u64, SolidSummary> = BTreeMap::new();
    for (id, view) in &state.views {
        let s = out.entry(view.entry.solid_id).or_insert(SolidSummary {
            solid_id: view.entry.solid_id,
            view_count: 0,
            kept_count: 0,
        });
        s.view_count += 1;
        if view_survives(&log.votes_for(id), state.roster.len()) {
            s.kept_count += 1;
        }
    }
    Json(out.into_values().collect())
}

async fn solid_views(State(state): State<Arc<AppState>>, UrlPath(solid): UrlPath<u64>) -> Response {
    let log = state.log.lock().await;
    let views: Vec<ViewSummary> = state
        .views
        .iter()
        .filter(|(_, v)| v.entry.solid_id == solid)
        .map(|(id, _)| ViewSummary { view_id: id.clone(), votes: log.votes_for(id) })
        .collect();
    if views.is_empty() {
        return error(StatusCode::NOT_FOUND, format!("unknown solid {solid}"));
    }
    Json(views).into_response()
}

#[derive(Debug, Deserialize)]
struct ImageQuery {
    #[serde(default)]
    overlay: bool,
}

async fn view_image(
    State(state): State<Arc<AppState>>,
    UrlPath(view): UrlPath<String>,
    Query(query): Query<ImageQuery>,
) -> Response {
    let Some(record) = state.views.get(&view) else {
        return error(StatusCode::NOT_FOUND, format!("unknown view {view}"));
    };
    let dir = record.split_dir.join(&record.entry.path);
    let result = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ForgeError> {
        let png = std::fs::read(dir.join(IMAGE_FILE)).map_err(|e| ForgeError::Io { path: dir.join(IMAGE_FILE), source: e })?;
        if !query.overlay {
            return Ok(png);
        }
        let sample = load_sample(&dir, false)?.sample;
        overlay_png(&png, &sample.wireframe, &sample.intrinsics)
    })
    .await;
    match result {
        Ok(Ok(png)) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn cast_vote(
    State(state): State<Arc<AppState>>,
    UrlPath(view): UrlPath<String>,
    Json(req): Json<VoteRequest>,
) -> Response {
    if !state.views.contains_key(&view) {
        return error(StatusCode::NOT_FOUND, format!("unknown view {view}"));
    }
    if !state.roster.contains(&req.voter) {
        return error(StatusCode::BAD_REQUEST, format!("voter {:?} is not in the roster", req.voter));
    }
    let mut log = state.log.lock().await;
    let previous = log.votes_for(&view).get(&req.voter).copied();
    let vote = Vote {
        view_id: view.clone(),
        voter: req.voter.clone(),
        keep: req.keep,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
    };
    if let Err(e) = CurationLog::append_jsonl(&state.log_path, &vote) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    log.push(vote);
    let warning = previous.map(|p| format!("replaced earlier vote by {} (keep={p})", req.voter));
    if let Some(w) = &warning {
        log::warn!("view {view}: {w}");
    }
    Json(VoteResponse { view_id: view.clone(), votes: log.votes_for(&view), warning }).into_response()
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    #[serde(default)]
    allow_partial: bool,
}

async fn export(State(state): State<Arc<AppState>>, Query(query): Query<ExportQuery>) -> Response {
    let log = state.log.lock().await;
    match apply_curation(&state.manifests, &log, &state.roster, query.allow_partial) {
        Ok(outcome) => Json(outcome).into_response(),
        Err(ForgeError::PartialVotes { views }) => (
            StatusCode::CONFLICT,
            Json(ApiError { error: format!("{} view(s) lack a full set of votes", views.len()), details: views }),
        )
            .into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/solids", get(list_solids))
        .route("/api/solids/{id}/views", get(solid_views))
        .route("/api/views/{id}/image.png", get(view_image))
        .route("/api/views/{id}/vote", post(cast_vote))
        .route("/api/export", get(export))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "no such endpoint") })
        .with_state(state)
}

pub async fn serve(state: AppState, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("curation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Body of a successful export, as served and as written by `curate-export`.
pub fn export_json(outcome: &howire_core::forge::CurationOutcome) -> String {
    let mut s = serde_json::to_string_pretty(outcome).expect("outcome serializes");
    s.push('\n');
    s
}
