//! JSON API over a [`ReviewStore`].

use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{
    likert_means, write_likert_csv, write_means_csv, Criterion, LikertScore, ReviewError, ReviewStore, TaskKind,
};

pub type SharedStore = Arc<RwLock<ReviewStore>>;

pub fn shared(store: ReviewStore) -> SharedStore {
    Arc::new(RwLock::new(store))
}

/// API routes under `/api`; everything else is served from `static_dir`
/// when given.
pub fn router(store: SharedStore, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/tasks", get(list_tasks))
        .route("/api/samples/{id}", get(get_sample))
        .route("/api/annotations", post(post_annotation))
        .route("/api/likert", post(post_likert))
        .route("/api/export", get(export))
        .route("/api/progress", get(progress))
        .route("/api/config", get(config))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

struct ApiError(StatusCode, String);

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let status = match &e {
            ReviewError::UnknownTask(_) => StatusCode::NOT_FOUND,
            ReviewError::Io { .. } | ReviewError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn read(store: &SharedStore) -> std::sync::RwLockReadGuard<'_, ReviewStore> {
    store.read().unwrap_or_else(|p| p.into_inner())
}

fn write(store: &SharedStore) -> std::sync::RwLockWriteGuard<'_, ReviewStore> {
    store.write().unwrap_or_else(|p| p.into_inner())
}

fn parse_kind(kind: Option<&str>) -> Result<Option<TaskKind>, ApiError> {
    kind.map(|k| k.parse().map_err(|e| ApiError(StatusCode::BAD_REQUEST, e)))
        .transpose()
}

#[derive(Debug, Deserialize)]
struct TaskQuery {
    reviewer: Option<String>,
    kind: Option<String>,
}

async fn list_tasks(State(store): State<SharedStore>, Query(q): Query<TaskQuery>) -> Result<Response, ApiError> {
    let kind = parse_kind(q.kind.as_deref())?;
    Ok(Json(read(&store).tasks(q.reviewer.as_deref(), kind)).into_response())
}

async fn get_sample(State(store): State<SharedStore>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    match read(&store).sample(&id) {
        Some(s) => Ok(Json(s).into_response()),
        None => Err(ApiError(StatusCode::NOT_FOUND, format!("unknown sample `{id}`"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationSubmission {
    pub task_id: String,
    pub tagged: String,
}

async fn post_annotation(
    State(store): State<SharedStore>,
    Json(body): Json<AnnotationSubmission>,
) -> Result<Response, ApiError> {
    let sample = write(&store).submit_annotation(&body.task_id, &body.tagged)?;
    Ok(Json(sample).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LikertSubmission {
    pub task_id: String,
    #[serde(flatten)]
    pub score: LikertScore,
}

async fn post_likert(
    State(store): State<SharedStore>,
    Json(body): Json<LikertSubmission>,
) -> Result<Response, ApiError> {
    write(&store).submit_likert(&body.task_id, body.score)?;
    Ok(Json(json!({ "task_id": body.task_id, "status": "done" })).into_response())
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    kind: String,
}

fn csv_response(buf: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response()
}

/// `kind=spans` gives JSONL, `likert` and `likert_means` give CSV.
async fn export(State(store): State<SharedStore>, Query(q): Query<ExportQuery>) -> Result<Response, ApiError> {
    let store = read(&store);
    let internal = |e: csv::Error| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    match q.kind.as_str() {
        "spans" | "span_annotation" => {
            let mut out = String::new();
            for s in store.export_annotations() {
                out.push_str(&serde_json::to_string(&s).expect("samples serialize"));
                out.push('\n');
            }
            Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
        }
        "likert" | "likert_review" => {
            let mut buf = Vec::new();
            write_likert_csv(&store.export_likert(), &mut buf).map_err(internal)?;
            Ok(csv_response(buf))
        }
        "likert_means" => {
            let mut buf = Vec::new();
            write_means_csv(&likert_means(&store.export_likert()), &mut buf).map_err(internal)?;
            Ok(csv_response(buf))
        }
        other => Err(ApiError(StatusCode::BAD_REQUEST, format!("unknown export kind `{other}`"))),
    }
}

async fn progress(State(store): State<SharedStore>) -> Response {
    Json(read(&store).progress()).into_response()
}

async fn config(State(store): State<SharedStore>) -> Response {
    let cfg = read(&store).config();
    let labels: Vec<&str> = slurg_core::Tier1::ALL.iter().map(|t| t.tag_name()).collect();
    let criteria: Vec<&str> = Criterion::ALL.iter().map(|c| c.as_str()).collect();
    Json(json!({
        "scale_points": cfg.scale_points,
        "criteria": criteria,
        "labels": labels,
    }))
    .into_response()
}
