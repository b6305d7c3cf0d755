//! HTTP backend for blind pairwise transcript annotation.
//!
//! Routes:
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | POST | `/campaign` | [`CampaignRequest`] | [`ProgressResponse`] |
//! | GET | `/session/{id}/next` | optional `?index=i` | [`NextResponse`] |
//! | POST | `/session/{id}/submit` | `PreferenceRecord` | [`SubmitResponse`] |
//! | GET | `/session/{id}/progress` | | [`ProgressResponse`] |
//! | GET | `/session/{id}/records` | | records JSONL |
//! | GET | `/audio/{utterance_id}` | `Range` header | audio bytes |
//!
//! Errors come back as `{"error": code, "message": text}` with codes
//! `session_complete`, `invalid_choice`, `unknown_task`, `stale_session`,
//! `not_found`, `conflict` and `bad_request`. No response carries the
//! gold/model resolution of a task.

mod error;
pub mod session;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use phonaudit_core::jsonl;
use phonaudit_core::pipeline::{BlindTask, DatasetManifest};
use phonaudit_core::PreferenceRecord;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};
use tower_http::services::ServeFile;

pub use error::{ServiceError, ServiceResult};
pub use session::{Session, Snapshot, Stored};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Root for session directories.
    pub data_dir: PathBuf,
    /// Manifest whose `audio` paths are served.
    pub manifest: Option<PathBuf>,
    /// Base for relative audio paths; defaults to the manifest's directory.
    pub audio_root: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions_dir: PathBuf,
    audio_root: PathBuf,
    audio: RwLock<HashMap<String, PathBuf>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    /// Loads the manifest and resumes every session found under `data_dir`.
    pub fn open(config: &ServiceConfig) -> ServiceResult<Self> {
        let sessions_dir = config.data_dir.join("sessions");
        std::fs::create_dir_all(&sessions_dir)?;
        let audio_root = match (&config.audio_root, &config.manifest) {
            (Some(root), _) => root.clone(),
            (None, Some(m)) => m.parent().map(Path::to_path_buf).unwrap_or_default(),
            (None, None) => PathBuf::from("."),
        };
        let mut audio = HashMap::new();
        if let Some(path) = &config.manifest {
            let manifest = DatasetManifest::load(path)?;
            for e in manifest.entries() {
                audio.insert(e.utterance_id.clone(), audio_root.join(&e.audio_path));
            }
        }
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&sessions_dir)? {
            let dir = entry?.path();
            if !dir.join(session::SNAPSHOT_FILE).exists() {
                continue;
            }
            let s = Session::open(dir)?;
            log::info!("resumed session {} at {}/{}", s.session_id, s.cursor, s.total());
            for t in &s.tasks {
                audio.entry(t.utterance_id.clone()).or_insert_with(|| audio_root.join(&t.audio_path));
            }
            sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
        }
        Ok(Self {
            inner: Arc::new(Inner {
                sessions_dir,
                audio_root,
                audio: RwLock::new(audio),
                sessions: RwLock::new(sessions),
            }),
        })
    }

    async fn session(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.inner
            .sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/campaign", post(create_campaign))
        .route("/session/{id}/next", get(next_task))
        .route("/session/{id}/submit", post(submit))
        .route("/session/{id}/progress", get(progress))
        .route("/session/{id}/records", get(records))
        .route("/audio/{utterance_id}", get(audio))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignRequest {
    pub session_id: String,
    pub annotator_id: String,
    /// Inline blind tasks.
    #[serde(default)]
    pub tasks: Option<Vec<BlindTask>>,
    /// Or a blind task file readable by the server.
    #[serde(default)]
    pub tasks_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressResponse {
    pub session_id: String,
    pub annotator_id: String,
    pub total: usize,
    pub completed: usize,
    pub cursor: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    pub session_id: String,
    pub index: usize,
    pub total: usize,
    pub task: BlindTask,
    /// The stored answer when the task was already submitted.
    pub record: Option<PreferenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub task_id: String,
    /// False when an identical record was already stored.
    pub stored: bool,
    pub cursor: usize,
    pub total: usize,
    pub complete: bool,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    index: Option<usize>,
}

fn progress_of(s: &Session) -> ProgressResponse {
    ProgressResponse {
        session_id: s.session_id.clone(),
        annotator_id: s.annotator_id.clone(),
        total: s.total(),
        completed: s.records.len(),
        cursor: s.cursor,
        complete: s.is_complete(),
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && id != "." && id != ".."
}

async fn create_campaign(
    State(state): State<AppState>,
    Json(req): Json<CampaignRequest>,
) -> ServiceResult<Json<ProgressResponse>> {
    if !valid_id(&req.session_id) {
        return Err(ServiceError::BadRequest(format!("invalid session id {:?}", req.session_id)));
    }
    if req.annotator_id.is_empty() {
        return Err(ServiceError::BadRequest("annotator_id is required".into()));
    }
    let tasks = match (req.tasks, req.tasks_file) {
        (Some(t), None) => t,
        (None, Some(path)) => {
            jsonl::read(&path).map_err(|e| ServiceError::BadRequest(format!("cannot load task file: {e}")))?
        }
        _ => return Err(ServiceError::BadRequest("give exactly one of tasks and tasks_file".into())),
    };

    let mut sessions = state.inner.sessions.write().await;
    if let Some(existing) = sessions.get(&req.session_id) {
        let s = existing.lock().await;
        if s.annotator_id == req.annotator_id && s.tasks == tasks {
            return Ok(Json(progress_of(&s)));
        }
        return Err(ServiceError::Conflict(format!("session {} exists with other tasks", req.session_id)));
    }
    let dir = state.inner.sessions_dir.join(&req.session_id);
    let session = Session::create(dir, &req.session_id, &req.annotator_id, tasks)?;
    {
        let mut audio = state.inner.audio.write().await;
        for t in &session.tasks {
            audio
                .entry(t.utterance_id.clone())
                .or_insert_with(|| state.inner.audio_root.join(&t.audio_path));
        }
    }
    let body = progress_of(&session);
    sessions.insert(req.session_id, Arc::new(Mutex::new(session)));
    Ok(Json(body))
}

async fn next_task(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<NextQuery>,
) -> ServiceResult<Json<NextResponse>> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    let (index, task, record) = s.task_at(q.index)?;
    Ok(Json(NextResponse {
        session_id: s.session_id.clone(),
        index,
        total: s.total(),
        task: task.clone(),
        record: record.cloned(),
    }))
}

async fn submit(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(record): Json<PreferenceRecord>,
) -> ServiceResult<Json<SubmitResponse>> {
    let session = state.session(&id).await?;
    let mut s = session.lock().await;
    let task_id = record.task_id.clone();
    // the fsync runs under the session lock: one writer per session
    let stored = s.submit(record)?;
    Ok(Json(SubmitResponse {
        task_id,
        stored: stored == Stored::Appended,
        cursor: s.cursor,
        total: s.total(),
        complete: s.is_complete(),
    }))
}

async fn progress(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ServiceResult<Json<ProgressResponse>> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    Ok(Json(progress_of(&s)))
}

async fn records(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ServiceResult<Response> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    let body = jsonl::to_string(&s.compacted_records())?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn audio(
    State(state): State<AppState>,
    UrlPath(utterance_id): UrlPath<String>,
    request: Request,
) -> ServiceResult<Response> {
    let path = state
        .inner
        .audio
        .read()
        .await
        .get(&utterance_id)
        .cloned()
        .ok_or_else(|| ServiceError::NotFound(format!("utterance {utterance_id}")))?;
    if !path.is_file() {
        return Err(ServiceError::NotFound(format!("audio for {utterance_id}")));
    }
    let response = ServeFile::new(path)
        .try_call(request)
        .await
        .map_err(ServiceError::Io)?;
    Ok(response.into_response())
}
