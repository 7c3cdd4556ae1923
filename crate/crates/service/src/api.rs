//! HTTP/JSON API over sessions and memory.
//!
//! | method | path                          | body / query            | response           |
//! |--------|-------------------------------|-------------------------|--------------------|
//! | POST   | `/api/sessions`               | `{question, choices?}`  | `SessionState`     |
//! | GET    | `/api/sessions/{id}`          |                         | `SessionState`     |
//! | POST   | `/api/sessions/{id}/feedback` | `{action}`              | `SessionState`     |
//! | DELETE | `/api/sessions/{id}`          |                         | `SessionState` (abandoned) |
//! | GET    | `/api/memory`                 | `?query=&k=&strategy=`  | `{results}`        |
//! | POST   | `/api/memory`                 | `{text}`                | `FactRecord`       |
//! | DELETE | `/api/memory/{id}`            |                         | `FactRecord`       |
//! | GET    | `/api/health`                 |                         | `{status, ...}`    |
//!
//! Errors are `{code, message}` with a 4xx status for client faults and 503
//! when the reasoning backend is unreachable.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use teachqa_core::engine::{BackendError, ReasoningBackend};
use teachqa_core::session::{self, SessionEnv};
use teachqa_core::{
    Choice, ControllerConfig, ControllerError, FactRecord, FeedbackAction, IndexStrategy,
    MemoryError, MemoryHandle, Provenance, SessionError, SessionState,
};
use tokio::sync::Mutex as AsyncMutex;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text())
    }
}

impl From<BackendError> for ApiError {
    fn from(e: BackendError) -> Self {
        let msg = e.to_string();
        match e {
            BackendError::Unavailable(_) => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "backend_unavailable", msg),
            BackendError::Protocol(_) => ApiError::new(StatusCode::BAD_GATEWAY, "backend_protocol", msg),
            BackendError::NoCandidates => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_candidates", msg),
            BackendError::UnparseableStatement(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unparseable_statement", msg)
            }
            BackendError::InvalidRequest(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", msg),
        }
    }
}

impl From<MemoryError> for ApiError {
    fn from(e: MemoryError) -> Self {
        let msg = e.to_string();
        match e {
            MemoryError::EmptyFact | MemoryError::EmptyPremises | MemoryError::EmptyHypothesis => {
                ApiError::new(StatusCode::BAD_REQUEST, "empty_text", msg)
            }
            MemoryError::UnknownFact(_) | MemoryError::UnknownGoldId(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_fact", msg)
            }
            MemoryError::InvalidConfig(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", msg),
            MemoryError::Io { .. } | MemoryError::Format { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persistence_failed", msg)
            }
        }
    }
}

impl From<ControllerError> for ApiError {
    fn from(e: ControllerError) -> Self {
        match e {
            ControllerError::Backend(b) => b.into(),
            ControllerError::Memory(m) => m.into(),
            ControllerError::NoChoices | ControllerError::EmptyQuestion => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_question", e.to_string())
            }
            ControllerError::InvalidConfig(_) => ApiError::internal(e.to_string()),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::InvalidQuestion(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_question", msg),
            SessionError::SessionClosed(_) => ApiError::new(StatusCode::CONFLICT, "session_closed", msg),
            SessionError::BadIndex { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_index", msg),
            SessionError::ActionNotApplicable(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "action_not_applicable", msg)
            }
            SessionError::EmptyText => ApiError::new(StatusCode::BAD_REQUEST, "empty_text", msg),
            SessionError::NotConfirmed => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_confirmed", msg),
            SessionError::Transcript(_) => ApiError::new(StatusCode::BAD_REQUEST, "bad_transcript", msg),
            SessionError::Controller(c) => c.into(),
            SessionError::Memory(m) => m.into(),
            SessionError::Backend(b) => b.into(),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

struct SessionEntry {
    state: SessionState,
    last_used: Instant,
}

type SessionSlot = Arc<AsyncMutex<SessionEntry>>;

/// Shared state behind every handler.
pub struct AppState {
    pub memory: MemoryHandle,
    pub backend: Arc<dyn ReasoningBackend>,
    pub backend_name: String,
    pub controller: ControllerConfig,
    pub memory_path: Option<PathBuf>,
    pub autosave: bool,
    pub session_idle: Duration,
    sessions: parking_lot::Mutex<HashMap<String, SessionSlot>>,
}

impl AppState {
    pub fn new(memory: MemoryHandle, backend: Arc<dyn ReasoningBackend>, controller: ControllerConfig) -> Self {
        Self {
            memory,
            backend,
            backend_name: "symbolic".into(),
            controller,
            memory_path: None,
            autosave: false,
            session_idle: Duration::from_secs(3600),
            sessions: parking_lot::Mutex::new(HashMap::new()),
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().len()
    }

    /// Drops sessions idle for longer than `session_idle`. Sessions busy with
    /// a request are skipped.
    pub fn sweep_expired(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.lock();
        let before = sessions.len();
        sessions.retain(|_, slot| match slot.try_lock() {
            Ok(entry) => now.saturating_duration_since(entry.last_used) < self.session_idle,
            Err(_) => true,
        });
        before - sessions.len()
    }

    fn slot(&self, id: &str) -> Result<SessionSlot, ApiError> {
        self.sessions
            .lock()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
    }

    fn persist(&self) -> Result<(), ApiError> {
        if !self.autosave {
            return Ok(());
        }
        if let Some(path) = &self.memory_path {
            self.memory.read().save(path)?;
        }
        Ok(())
    }

    fn env(&self) -> SessionEnv<'_> {
        SessionEnv::new(&self.memory, self.backend.as_ref(), &self.controller)
    }
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ChoiceInput {
    Text(String),
    Labeled(Choice),
}

#[derive(Debug, Clone, Deserialize)]
pub struct NewSession {
    pub question: String,
    #[serde(default)]
    pub choices: Option<Vec<ChoiceInput>>,
}

fn resolve_choices(input: Vec<ChoiceInput>) -> Vec<Choice> {
    let lettered = Choice::lettered(&input.iter().map(|_| "").collect::<Vec<_>>());
    input
        .into_iter()
        .zip(lettered)
        .map(|(c, l)| match c {
            ChoiceInput::Text(text) => Choice::new(l.label, text),
            ChoiceInput::Labeled(c) => c,
        })
        .collect()
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<NewSession>, JsonRejection>,
) -> ApiResult<SessionState> {
    let Json(req) = body?;
    let worker = app.clone();
    let state = blocking(move || {
        let choices = match req.choices {
            Some(c) if !c.is_empty() => resolve_choices(c),
            _ => {
                let candidates = worker
                    .backend
                    .generate_candidates(&req.question, worker.controller.candidate_n)?;
                Choice::lettered(&candidates)
            }
        };
        let id = uuid::Uuid::new_v4().to_string();
        Ok(session::start_session(id, &req.question, &choices, worker.env())?)
    })
    .await?;
    let entry = SessionEntry {
        state: state.clone(),
        last_used: Instant::now(),
    };
    app.sessions
        .lock()
        .insert(state.session_id.clone(), Arc::new(AsyncMutex::new(entry)));
    log::info!("session {} started", state.session_id);
    Ok(Json(state))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionState> {
    let slot = app.slot(&id)?;
    let mut entry = slot.lock().await;
    entry.last_used = Instant::now();
    Ok(Json(entry.state.clone()))
}

#[derive(Debug, Clone, Deserialize)]
pub struct FeedbackBody {
    pub action: FeedbackAction,
}

async fn post_feedback(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<FeedbackBody>, JsonRejection>,
) -> ApiResult<SessionState> {
    let Json(FeedbackBody { action }) = body?;
    let slot = app.slot(&id)?;
    let mut entry = slot.lock_owned().await;
    let worker = app.clone();
    let (entry, result) = blocking(move || {
        entry.last_used = Instant::now();
        let result = session::apply_feedback(&mut entry.state, action, worker.env())
            .map_err(ApiError::from)
            .and_then(|()| worker.persist());
        Ok((entry, result))
    })
    .await?;
    result?;
    Ok(Json(entry.state.clone()))
}

async fn abandon_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionState> {
    let slot = app.slot(&id)?;
    let state = {
        let mut entry = slot.lock().await;
        session::abandon(&mut entry.state)?;
        entry.state.clone()
    };
    app.sessions.lock().remove(&id);
    Ok(Json(state))
}

#[derive(Debug, Clone, Deserialize)]
pub struct MemoryQuery {
    pub query: Option<String>,
    pub k: Option<usize>,
    pub strategy: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryHit {
    pub record: FactRecord,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryListing {
    pub results: Vec<MemoryHit>,
}

async fn get_memory(
    State(app): State<Arc<AppState>>,
    Query(q): Query<MemoryQuery>,
) -> ApiResult<MemoryListing> {
    let results = match q.query.filter(|s| !s.trim().is_empty()) {
        None => app
            .memory
            .read()
            .facts()
            .map(|r| MemoryHit {
                record: r.clone(),
                score: None,
            })
            .collect(),
        Some(query) => {
            let mut cfg = app.controller.retrieval.clone();
            if let Some(k) = q.k {
                cfg.r = k;
            }
            if let Some(s) = q.strategy {
                cfg.strategy = s
                    .parse::<IndexStrategy>()
                    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string()))?;
            }
            cfg.validate()?;
            app.memory
                .retrieve(&query, &cfg)
                .into_iter()
                .map(|r| MemoryHit {
                    record: r.record,
                    score: Some(r.score),
                })
                .collect()
        }
    };
    Ok(Json(MemoryListing { results }))
}

#[derive(Debug, Clone, Deserialize)]
pub struct NewFact {
    pub text: String,
}

async fn post_memory(
    State(app): State<Arc<AppState>>,
    body: Result<Json<NewFact>, JsonRejection>,
) -> ApiResult<FactRecord> {
    let Json(NewFact { text }) = body?;
    let worker = app.clone();
    blocking(move || {
        let rec = worker.memory.add_fact(&text, Provenance::User, None)?;
        worker.persist()?;
        Ok(Json(rec))
    })
    .await
}

async fn delete_memory(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<FactRecord> {
    let worker = app.clone();
    blocking(move || {
        let rec = worker.memory.write().remove_fact(&id)?;
        worker.persist()?;
        Ok(Json(rec))
    })
    .await
}

async fn health(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "backend": app.backend_name,
        "facts": app.memory.read().len(),
        "sessions": app.session_count(),
    }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session).delete(abandon_session))
        .route("/api/sessions/{id}/feedback", post(post_feedback))
        .route("/api/memory", get(get_memory).post(post_memory))
        .route("/api/memory/{id}", axum::routing::delete(delete_memory))
        .route("/api/health", get(health))
        .fallback(not_found)
        .with_state(state)
}

/// Periodically drops idle sessions until the state is dropped elsewhere.
pub fn spawn_sweeper(state: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    let period = (state.session_idle / 4).clamp(Duration::from_millis(10), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = state.sweep_expired(Instant::now());
            if n > 0 {
                log::info!("expired {n} idle sessions");
            }
        }
    })
}
