//! HTTP boundary over [`Workspace`]. Every route calls one workspace
//! operation and returns its output as canonical JSON, unchanged.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use learnmate_core::adaptmate::Decision;
use learnmate_core::canonical;
use learnmate_core::corpus::{parse_transcript, Corpus, CourseManifest};
use learnmate_core::domain::LearnerProfile;
use learnmate_core::studymate::Tier;
use learnmate_core::workflow::{WorkflowError, WorkflowResult, Workspace};

pub const DEFAULT_LISTEN_ADDR: &str = "127.0.0.1:8080";

/// The OpenAPI description shipped with the service.
pub const OPENAPI: &str = include_str!("../openapi.yaml");

/// The error body of every failed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub http_status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            http_status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
            detail: None,
        }
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        Self {
            http_status: e.http_status(),
            code: e.code.to_string(),
            message: e.message,
            detail: e.detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json_response(status, canonical::to_string(&self))
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

type Ws = Arc<Workspace>;

/// Runs a workspace call off the async runtime; agent calls may block.
async fn call<T, F>(ws: Ws, status: StatusCode, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Workspace) -> WorkflowResult<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(move || f(&ws)).await {
        Ok(Ok(value)) => json_response(status, canonical::to_string(&value)),
        Ok(Err(e)) => ApiError::from(e).into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()).into_response(),
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", format!("invalid request body: {e}")))
}

macro_rules! parse_or_reply {
    ($bytes:expr) => {
        match body(&$bytes) {
            Ok(v) => v,
            Err(e) => return e.into_response(),
        }
    };
}

pub fn router(ws: Arc<Workspace>) -> Router {
    Router::new()
        .route("/openapi.yaml", get(openapi))
        .route("/courses", post(post_course))
        .route("/courses/:id", get(get_course))
        .route("/profiles", post(post_profile))
        .route("/profiles/:id", get(get_profile))
        .route("/plans", post(post_plan))
        .route("/plans/:id", get(get_plan))
        .route("/plans/:id/history", get(get_history))
        .route("/plans/:id/decisions", get(get_decisions))
        .route("/plans/:id/adaptations", post(post_adaptation))
        .route("/plans/:id/undo", post(post_undo))
        .route("/adaptations/:id", get(get_adaptation))
        .route("/adaptations/:id/decision", post(post_decision))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/start", post(post_start))
        .route("/sessions/:id/questions", post(post_question))
        .route("/sessions/:id/answers/:answer_id/expand", post(post_expand))
        .route("/sessions/:id/end", post(post_end))
        .route("/sessions/:id/abandon", post(post_abandon))
        .route("/sessions/:id/quiz", post(post_quiz))
        .route("/sessions/:id/digest", get(get_digest))
        .route("/sessions/:id/report", get(get_report))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route") })
        .with_state(ws)
}

/// Reads `LISTEN_ADDR`, falling back to the default address.
pub fn listen_addr() -> Result<SocketAddr, String> {
    let raw = std::env::var("LISTEN_ADDR").unwrap_or_else(|_| DEFAULT_LISTEN_ADDR.to_string());
    raw.parse().map_err(|e| format!("LISTEN_ADDR `{raw}`: {e}"))
}

pub async fn serve(addr: SocketAddr, ws: Arc<Workspace>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(ws)).await
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/yaml")], OPENAPI).into_response()
}

/// A course either read from a manifest on the server's disk or uploaded
/// with the raw text of every transcript.
#[derive(Deserialize)]
#[serde(untagged)]
enum CourseUpload {
    Path {
        manifest_path: PathBuf,
    },
    Inline {
        manifest: CourseManifest,
        transcripts: BTreeMap<String, String>,
    },
}

async fn post_course(State(ws): State<Ws>, bytes: Bytes) -> Response {
    let upload: CourseUpload = parse_or_reply!(bytes);
    call(ws, StatusCode::CREATED, move |ws| match upload {
        CourseUpload::Path { manifest_path } => ws.ingest_path(&manifest_path),
        CourseUpload::Inline { manifest, transcripts } => {
            let parsed = transcripts
                .iter()
                .map(|(id, text)| parse_transcript(id, text.as_bytes()))
                .collect::<Result<Vec<_>, _>>()?;
            ws.ingest(&Corpus::new(manifest, parsed)?)
        }
    })
    .await
}

async fn get_course(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| Ok(ws.course(&id)?.manifest().clone())).await
}

async fn post_profile(State(ws): State<Ws>, bytes: Bytes) -> Response {
    let profile: LearnerProfile = parse_or_reply!(bytes);
    call(ws, StatusCode::CREATED, move |ws| ws.put_profile(&profile)).await
}

async fn get_profile(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.profile(&id)).await
}

#[derive(Deserialize)]
struct NewPlan {
    learner_id: String,
    course_id: String,
}

async fn post_plan(State(ws): State<Ws>, bytes: Bytes) -> Response {
    let req: NewPlan = parse_or_reply!(bytes);
    call(ws, StatusCode::CREATED, move |ws| ws.create_plan(&req.learner_id, &req.course_id)).await
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

/// `/plans/{id}` and, for ids ending in `.ics`, the calendar export.
async fn get_plan(State(ws): State<Ws>, Path(id): Path<String>, Query(q): Query<VersionQuery>) -> Response {
    if let Some(plan_id) = id.strip_suffix(".ics") {
        let plan_id = plan_id.to_string();
        return match tokio::task::spawn_blocking(move || ws.ics(&plan_id, q.version)).await {
            Ok(Ok(bytes)) => ([(header::CONTENT_TYPE, "text/calendar; charset=utf-8")], bytes).into_response(),
            Ok(Err(e)) => ApiError::from(e).into_response(),
            Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()).into_response(),
        };
    }
    call(ws, StatusCode::OK, move |ws| ws.plan(&id, q.version)).await
}

async fn get_history(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.history(&id)).await
}

async fn get_decisions(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.decisions(&id)).await
}

async fn post_adaptation(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::CREATED, move |ws| ws.propose(&id)).await
}

async fn get_adaptation(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.proposal(&id)).await
}

async fn post_decision(State(ws): State<Ws>, Path(id): Path<String>, bytes: Bytes) -> Response {
    let decision: Decision = parse_or_reply!(bytes);
    call(ws, StatusCode::OK, move |ws| ws.decide(&id, decision)).await
}

async fn post_undo(State(ws): State<Ws>, Path(id): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.undo(&id)).await
}

async fn get_session(State(ws): State<Ws>, Path(key): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.session(&key)).await
}

async fn post_start(State(ws): State<Ws>, Path(key): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.start_session(&key)).await
}

#[derive(Deserialize)]
struct Question {
    text: String,
}

async fn post_question(State(ws): State<Ws>, Path(key): Path<String>, bytes: Bytes) -> Response {
    let q: Question = parse_or_reply!(bytes);
    call(ws, StatusCode::OK, move |ws| ws.ask(&key, &q.text)).await
}

#[derive(Deserialize)]
struct Expand {
    tier: Tier,
}

async fn post_expand(
    State(ws): State<Ws>,
    Path((key, answer_id)): Path<(String, String)>,
    bytes: Bytes,
) -> Response {
    let req: Expand = parse_or_reply!(bytes);
    call(ws, StatusCode::OK, move |ws| ws.expand(&key, &answer_id, req.tier)).await
}

async fn post_end(State(ws): State<Ws>, Path(key): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.end_session(&key)).await
}

async fn post_abandon(State(ws): State<Ws>, Path(key): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.abandon_session(&key)).await
}

#[derive(Deserialize)]
struct QuizAnswers {
    answers: Vec<usize>,
}

async fn post_quiz(State(ws): State<Ws>, Path(key): Path<String>, bytes: Bytes) -> Response {
    let req: QuizAnswers = parse_or_reply!(bytes);
    call(ws, StatusCode::OK, move |ws| ws.submit_quiz(&key, &req.answers)).await
}

async fn get_digest(State(ws): State<Ws>, Path(key): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.digest(&key)).await
}

async fn get_report(State(ws): State<Ws>, Path(key): Path<String>) -> Response {
    call(ws, StatusCode::OK, move |ws| ws.quiz_report(&key)).await
}
