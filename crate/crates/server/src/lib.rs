//! HTTP service over a plans directory and a session store.
//!
//! Routes:
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/trainings` | `[{id, title, description}]` sorted by id |
//! | GET | `/api/trainings/{id}` | `{plan, assets_base}` |
//! | POST | `/api/sessions` | `{training_id, participant_id}` → 201 `{session_id, started_at}` |
//! | POST | `/api/sessions/{id}/records` | `{records, finished_at}` → 204 |
//! | GET | `/api/reports/trainings/{id}` | `{training_id, blocks}`, `?participant=` filters |
//! | GET | `/assets/{training}/{path}` | stimulus files |
//!
//! Anything else under `/api` or `/assets` is a JSON 404; other GETs get the
//! app shell. Errors are `{status, code, message}`.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, Method, StatusCode, Uri};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sonda_core::analytics::BlockReport;
use sonda_core::catalog::{scan, training_report, PlanBundle, ReportError};
use sonda_core::plan::{is_safe_relative, serialize_plan};
use sonda_core::runtime::{expected_trials, ExpectedTrial, SessionConfig, SessionResult, TrialRecord, DEFAULT_TICK_MS};
use sonda_core::store::{Store, StoreError};
use tokio::net::TcpListener;

const SHELL: &str = include_str!("shell.html");

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub plans_dir: PathBuf,
    pub data_dir: PathBuf,
    pub port: u16,
    /// When set, report requests must carry it as a bearer token or `?token=`.
    pub report_token: Option<String>,
}

impl ServerConfig {
    /// Reads `SONDA_PLANS_DIR`, `SONDA_DATA_DIR`, `SONDA_PORT` and
    /// `SONDA_REPORT_TOKEN`, defaulting to `./plans`, `./data` and 8080.
    pub fn from_env() -> Result<Self, String> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        let port = match var("SONDA_PORT") {
            Some(p) => p.parse().map_err(|_| format!("SONDA_PORT is not a port number: {p:?}"))?,
            None => DEFAULT_PORT,
        };
        Ok(Self {
            plans_dir: var("SONDA_PLANS_DIR").map_or_else(|| PathBuf::from("plans"), PathBuf::from),
            data_dir: var("SONDA_DATA_DIR").map_or_else(|| PathBuf::from("data"), PathBuf::from),
            port,
            report_token: var("SONDA_REPORT_TOKEN"),
        })
    }
}

struct Training {
    bundle: PlanBundle,
    expected: Vec<ExpectedTrial>,
}

#[derive(Debug, Clone)]
struct OpenSession {
    training_id: String,
    participant_id: String,
    started_at: DateTime<Utc>,
}

enum Slot {
    Open(OpenSession),
    /// A submission holds the session while it validates and writes.
    Submitting,
    Closed,
}

/// Shared state: the plans loaded at startup, the store and the
/// open-session set.
pub struct AppState {
    trainings: BTreeMap<String, Training>,
    store: Arc<Store>,
    sessions: Mutex<HashMap<String, Slot>>,
    report_token: Option<String>,
}

impl AppState {
    /// Scans the plans directory and opens the store. Plans that fail to
    /// load or validate are logged and left out.
    pub fn load(config: &ServerConfig) -> Result<Self, StoreError> {
        let (bundles, rejected) = scan(&config.plans_dir);
        for err in &rejected {
            tracing::warn!("skipping plan: {err}");
        }
        let mut trainings = BTreeMap::new();
        for bundle in bundles {
            match expected_trials(&bundle.plan, &bundle.tables) {
                Ok(expected) => {
                    trainings.insert(bundle.plan.id.clone(), Training { bundle, expected });
                }
                Err(err) => tracing::warn!("skipping plan {}: {err}", bundle.plan.id),
            }
        }
        tracing::info!("serving {} trainings from {}", trainings.len(), config.plans_dir.display());
        Ok(Self {
            trainings,
            store: Arc::new(Store::open(&config.data_dir)?),
            sessions: Mutex::new(HashMap::new()),
            report_token: config.report_token.clone(),
        })
    }

    pub fn training_ids(&self) -> impl Iterator<Item = &str> {
        self.trainings.keys().map(String::as_str)
    }

    fn training(&self, id: &str) -> Result<&Training, ApiError> {
        self.trainings
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown training {id:?}")))
    }

    fn slots(&self) -> std::sync::MutexGuard<'_, HashMap<String, Slot>> {
        self.sessions.lock().unwrap_or_else(std::sync::PoisonError::into_inner)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/trainings", get(list_trainings))
        .route("/api/trainings/{id}", get(get_training))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/records", post(submit_records))
        .route("/api/reports/trainings/{id}", get(get_report))
        .route("/assets/{training}/{*path}", get(get_asset))
        .fallback(fallback)
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(state: Arc<AppState>, listener: TcpListener) -> io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!("listening on http://{addr}");
    }
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    fn invalid_body(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", message)
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        let message = message.into();
        tracing::error!("{message}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "status": self.status.as_u16(), "code": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid_body(e.to_string()))
}

#[derive(Serialize)]
struct TrainingSummary {
    id: String,
    title: String,
    description: String,
}

async fn list_trainings(State(state): State<Arc<AppState>>) -> Json<Vec<TrainingSummary>> {
    Json(
        state
            .trainings
            .values()
            .map(|t| TrainingSummary {
                id: t.bundle.plan.id.clone(),
                title: t.bundle.plan.title.clone(),
                description: t.bundle.plan.description.clone(),
            })
            .collect(),
    )
}

async fn get_training(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let training = state.training(&id)?;
    let plan: serde_json::Value = serde_json::from_str(&serialize_plan(&training.bundle.plan))
        .map_err(|e| ApiError::internal(format!("serializing plan {id}: {e}")))?;
    Ok(Json(json!({ "plan": plan, "assets_base": format!("/assets/{id}/") })).into_response())
}

#[derive(Deserialize)]
struct CreateSession {
    training_id: String,
    participant_id: String,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    if req.participant_id.trim().is_empty() {
        return Err(ApiError::invalid_body("participant_id must not be empty"));
    }
    state.training(&req.training_id)?;
    let session_id = uuid::Uuid::new_v4().to_string();
    let started_at = Utc::now();
    state.slots().insert(
        session_id.clone(),
        Slot::Open(OpenSession {
            training_id: req.training_id,
            participant_id: req.participant_id,
            started_at,
        }),
    );
    let body = json!({ "session_id": session_id, "started_at": sonda_core::store::format_timestamp(&started_at) });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    records: Vec<TrialRecord>,
    finished_at: DateTime<Utc>,
}

async fn submit_records(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<StatusCode, ApiError> {
    let open = {
        let mut slots = state.slots();
        match slots.get_mut(&id) {
            Some(slot @ Slot::Open(_)) => match std::mem::replace(slot, Slot::Submitting) {
                Slot::Open(open) => open,
                _ => unreachable!(),
            },
            Some(Slot::Submitting | Slot::Closed) => {
                return Err(ApiError::conflict(format!("session {id} is already closed")))
            }
            None if state.store.contains(&id) => {
                return Err(ApiError::conflict(format!("session {id} is already closed")))
            }
            None => return Err(ApiError::not_found(format!("unknown session {id:?}"))),
        }
    };

    let outcome = accept(&state, &id, &open, &body).await;
    state
        .slots()
        .insert(id, if outcome.is_ok() { Slot::Closed } else { Slot::Open(open) });
    outcome.map(|()| StatusCode::NO_CONTENT)
}

async fn accept(state: &Arc<AppState>, id: &str, open: &OpenSession, body: &[u8]) -> Result<(), ApiError> {
    let submission: Submission = parse_body(body)?;
    let training = state.training(&open.training_id)?;
    check_records(&training.expected, &submission.records).map_err(ApiError::validation)?;
    if submission.finished_at < open.started_at {
        return Err(ApiError::validation("finished_at precedes the session start"));
    }
    let result = SessionResult {
        config: SessionConfig {
            participant_id: open.participant_id.clone(),
            session_id: id.to_string(),
            training_id: open.training_id.clone(),
            started_at: open.started_at,
            tick_ms: DEFAULT_TICK_MS,
        },
        records: submission.records,
        finished_at: submission.finished_at,
    };
    let store = Arc::clone(&state.store);
    match tokio::task::spawn_blocking(move || store.put_session(&result)).await {
        Ok(Ok(_)) => Ok(()),
        Ok(Err(StoreError::DuplicateSession(_))) => Err(ApiError::conflict(format!("session {id} is already stored"))),
        Ok(Err(e)) => Err(ApiError::internal(format!("storing session {id}: {e}"))),
        Err(e) => Err(ApiError::internal(format!("storing session {id}: {e}"))),
    }
}

/// Revalidates client-produced records against the plan's expansion.
fn check_records(expected: &[ExpectedTrial], records: &[TrialRecord]) -> Result<(), String> {
    if records.len() != expected.len() {
        return Err(format!("expected {} records, got {}", expected.len(), records.len()));
    }
    for (i, (want, got)) in expected.iter().zip(records).enumerate() {
        let same_trial = got.loop_name == want.loop_name
            && got.rep_index == want.rep_index
            && got.row_index == want.row_index
            && got.routine_name == want.routine_name
            && got.correct_answer == want.correct_answer;
        if !same_trial {
            return Err(format!(
                "record {i} is {}/{}/{}/{} answer {:?}, expected {}/{}/{}/{} answer {:?}",
                got.loop_name,
                got.rep_index,
                got.row_index,
                got.routine_name,
                got.correct_answer,
                want.loop_name,
                want.rep_index,
                want.row_index,
                want.routine_name,
                want.correct_answer
            ));
        }
        if !got.response.is_empty() && !want.allowed_keys.contains(&got.response) {
            return Err(format!("record {i}: response {:?} is not an allowed key", got.response));
        }
        got.check(Some(want.window_ms)).map_err(|e| format!("record {i}: {e}"))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct ReportQuery {
    participant: Option<String>,
    token: Option<String>,
}

#[derive(Serialize)]
struct ReportBody {
    training_id: String,
    blocks: Vec<BlockReport>,
}

async fn get_report(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<ReportQuery>,
    headers: HeaderMap,
) -> Result<Json<ReportBody>, ApiError> {
    if let Some(expected) = &state.report_token {
        let bearer = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if bearer.or(query.token.as_deref()) != Some(expected.as_str()) {
            // Same answer as an unknown training: no hint that it exists.
            return Err(ApiError::not_found(format!("unknown training {id:?}")));
        }
    }
    state.training(&id)?;
    let participant = query.participant.filter(|p| !p.is_empty());
    let worker = Arc::clone(&state);
    let training_id = id.clone();
    let blocks = tokio::task::spawn_blocking(move || {
        let training = &worker.trainings[&training_id];
        training_report(&worker.store, &training.bundle, participant.as_deref())
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| match e {
        ReportError::Store(e) => ApiError::internal(format!("reading sessions of {id}: {e}")),
        ReportError::Analytics(e) => ApiError::internal(format!("aggregating {id}: {e}")),
    })?;
    Ok(Json(ReportBody { training_id: id, blocks }))
}

fn media_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("wav") => "audio/wav",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("mp3") => "audio/mpeg",
        Some("csv") => "text/csv; charset=utf-8",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

async fn get_asset(
    State(state): State<Arc<AppState>>,
    UrlPath((training, path)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    let missing = || ApiError::not_found(format!("no asset {path:?} in {training:?}"));
    let root = state.training(&training)?.bundle.assets_root();
    if !is_safe_relative(&path) {
        return Err(missing());
    }
    // Symlinks could still leave the asset directory.
    let (Ok(root), Ok(file)) = (tokio::fs::canonicalize(&root).await, tokio::fs::canonicalize(root.join(&path)).await)
    else {
        return Err(missing());
    };
    if !file.starts_with(&root) {
        return Err(missing());
    }
    match tokio::fs::read(&file).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, media_type(&file))], bytes).into_response()),
        Err(_) if file.is_dir() => Err(missing()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(missing()),
        Err(e) => Err(ApiError::internal(format!("reading {}: {e}", file.display()))),
    }
}

async fn fallback(method: Method, uri: Uri) -> Response {
    let path = uri.path();
    let reserved = ["/api", "/assets"]
        .iter()
        .any(|p| path == *p || path.starts_with(&format!("{p}/")));
    if reserved || method != Method::GET {
        return ApiError::not_found(format!("no route for {method} {path}")).into_response();
    }
    Html(SHELL).into_response()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sonda_core::runtime::Outcome;

    fn trial(answer: &str) -> ExpectedTrial {
        ExpectedTrial {
            loop_name: "b".into(),
            rep_index: 0,
            row_index: 0,
            routine_name: "r".into(),
            correct_answer: answer.into(),
            allowed_keys: vec!["left".into(), "right".into()],
            window_ms: 2000,
        }
    }

    fn record(answer: &str, response: &str, rt_ms: Option<u64>) -> TrialRecord {
        TrialRecord {
            loop_name: "b".into(),
            rep_index: 0,
            row_index: 0,
            routine_name: "r".into(),
            stimulus_image: String::new(),
            stimulus_audio: String::new(),
            correct_answer: answer.into(),
            response: response.into(),
            rt_ms,
            outcome: Outcome::classify(response, answer),
        }
    }

    #[test]
    fn media_types() {
        assert_eq!(media_type(Path::new("a/b.wav")), "audio/wav");
        assert_eq!(media_type(Path::new("b.SVG")), "image/svg+xml");
        assert_eq!(media_type(Path::new("b")), "application/octet-stream");
    }

    #[test]
    fn records_are_checked_against_expansion() {
        let expected = [trial("left")];
        assert!(check_records(&expected, &[record("left", "left", Some(2000))]).is_ok());
        assert!(check_records(&expected, &[record("left", "", None)]).is_ok());
        assert!(check_records(&expected, &[]).unwrap_err().contains("expected 1 records"));
        assert!(check_records(&expected, &[record("right", "right", Some(10))]).is_err());
        assert!(check_records(&expected, &[record("left", "up", Some(10))]).is_err());
        assert!(check_records(&expected, &[record("left", "left", Some(2001))]).is_err());
        let mut lying = record("left", "right", Some(10));
        lying.outcome = Outcome::Hit;
        assert!(check_records(&expected, &[lying]).unwrap_err().contains("contradicts"));
    }
}
