//! HTTP/JSON routes. Blocking work runs on the blocking pool.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use riskbench_core::registry::DatasetFilter;
use riskbench_core::scoring::ScoringError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::badge::Evidence;
use crate::service::{Service, ServiceError};

pub const DEFAULT_PORT: u16 = 8384;
const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

fn validation_details(e: &ScoringError) -> Value {
    match e {
        ScoringError::MissingPlayers(players) => json!({ "reason": "MISSING_PLAYERS", "players": players }),
        ScoringError::UnknownPlayers(players) => json!({ "reason": "UNKNOWN_PLAYERS", "players": players }),
        ScoringError::DuplicatePlayer { row, player_id } => {
            json!({ "reason": "DUPLICATE_PLAYER", "row": row, "player_id": player_id })
        }
        ScoringError::BadValue { row, reason } => json!({ "reason": "BAD_VALUE", "row": row, "message": reason }),
        ScoringError::BadHeader { expected, found } => {
            json!({ "reason": "BAD_HEADER", "expected": expected, "found": found })
        }
        other => json!({ "reason": "INVALID", "message": other.to_string() }),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, details) = match &self.0 {
            ServiceError::UnknownTask(_) => (StatusCode::NOT_FOUND, "UNKNOWN_TASK", Value::Null),
            ServiceError::UnknownDataset(_) => (StatusCode::NOT_FOUND, "UNKNOWN_DATASET", Value::Null),
            ServiceError::UnknownSubmission(_) => (StatusCode::NOT_FOUND, "UNKNOWN_SUBMISSION", Value::Null),
            ServiceError::ValidationFailed(e) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "VALIDATION_FAILED", validation_details(e))
            }
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "BAD_REQUEST", Value::Null),
            ServiceError::StorageFailure(_) => (StatusCode::INTERNAL_SERVER_ERROR, "STORAGE_FAILURE", Value::Null),
        };
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = ErrorBody {
            code,
            message: self.0.to_string(),
            details,
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T, F>(service: Arc<Service>, f: F) -> Result<T, ApiError>
where
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|e| ApiError(ServiceError::StorageFailure(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

async fn list_datasets(State(s): State<Arc<Service>>, Query(filter): Query<DatasetFilter>) -> ApiResult<Value> {
    let entries = blocking(s, move |s| s.datasets(&filter)).await?;
    Ok(Json(json!({ "datasets": entries })))
}

async fn get_dataset(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Value> {
    let entries = blocking(s, move |s| s.dataset(&id)).await?;
    Ok(Json(json!({ "versions": entries })))
}

async fn list_tasks(State(s): State<Arc<Service>>) -> ApiResult<Value> {
    let tasks = blocking(s, |s| s.tasks()).await?;
    Ok(Json(json!({ "tasks": tasks })))
}

async fn get_task(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Value> {
    let detail = blocking(s, move |s| s.task(&id)).await?;
    Ok(Json(serde_json::to_value(detail).expect("task detail serializes")))
}

async fn leaderboard(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Value> {
    let board = blocking(s, move |s| s.leaderboard(&id)).await?;
    Ok(Json(serde_json::to_value(board).expect("leaderboard serializes")))
}

async fn report(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Value> {
    let report = blocking(s, move |s| s.report(&id)).await?;
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(ServiceError::BadRequest(message.into()))
}

/// Multipart fields: `file` (the CSV), `submitter`, optional `evidence` (JSON).
async fn submit(
    State(s): State<Arc<Service>>,
    Path(task_id): Path<String>,
    mut multipart: Multipart,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let mut file = None;
    let mut submitter = None;
    let mut evidence = Evidence::default();
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| bad_request(format!("malformed multipart body: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| bad_request(format!("could not read field {name}: {e}")))?;
        match name.as_str() {
            "file" => file = Some(bytes.to_vec()),
            "submitter" => submitter = Some(String::from_utf8_lossy(&bytes).into_owned()),
            "evidence" if bytes.iter().all(u8::is_ascii_whitespace) => {}
            "evidence" => {
                evidence = serde_json::from_slice(&bytes).map_err(|e| bad_request(format!("evidence is not valid: {e}")))?
            }
            other => return Err(bad_request(format!("unexpected field {other:?}"))),
        }
    }
    let file = file.ok_or_else(|| bad_request("missing multipart field \"file\""))?;
    let submitter = submitter.ok_or_else(|| bad_request("missing multipart field \"submitter\""))?;
    let record = blocking(s, move |s| s.record_submission(&task_id, &submitter, &file, evidence)).await?;
    Ok((
        StatusCode::CREATED,
        Json(serde_json::to_value(record).expect("record serializes")),
    ))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}", get(get_dataset))
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/submissions", post(submit))
        .route("/tasks/{id}/leaderboard", get(leaderboard))
        .route("/submissions/{id}/report", get(report))
        .fallback(|| async {
            ApiError(ServiceError::BadRequest("no such route".into())).into_response_with(StatusCode::NOT_FOUND)
        })
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(service)
}

impl ApiError {
    fn into_response_with(self, status: StatusCode) -> Response {
        let mut response = self.into_response();
        *response.status_mut() = status;
        response
    }
}

/// Serves the API until the process is stopped.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(service)).await
}
