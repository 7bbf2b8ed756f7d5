//! HTTP routes.

use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{Choice, ParticipantMeta, RequestError, SessionView, Store, Trial};

pub struct ApiError(RequestError);

impl From<RequestError> for ApiError {
    fn from(e: RequestError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            RequestError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            RequestError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            RequestError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            RequestError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        let body = json!({ "code": code, "message": self.0.to_string() });
        (status, Json(body)).into_response()
    }
}

/// Parses a JSON body, reporting malformed input as a validation error with
/// the usual `{code, message}` shape.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError(RequestError::Validation(format!("invalid request body: {e}"))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    set_id: String,
    age: Option<u32>,
    gender: Option<String>,
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    k: usize,
    trials: Vec<Trial>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PostResponse {
    index: usize,
    choice: Choice,
    rt_ms: u64,
}

/// Runs a store call off the async workers since it may block on fsync.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, RequestError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(RequestError::Storage(e.to_string())))?
        .map_err(ApiError)
}

async fn create_session(
    State(store): State<Arc<Store>>,
    body: Bytes,
) -> Result<Json<Created>, ApiError> {
    let req: CreateSession = parse(&body)?;
    let meta = ParticipantMeta {
        age: req.age,
        gender: req.gender,
    };
    let view = blocking(move || store.create_session(&req.set_id, meta)).await?;
    Ok(Json(Created {
        session_id: view.session_id,
        k: view.k,
        trials: view.trials,
    }))
}

async fn get_session(
    State(store): State<Arc<Store>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(store.session(&id)?))
}

async fn post_response(
    State(store): State<Arc<Store>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let req: PostResponse = parse(&body)?;
    blocking(move || store.record_response(&id, req.index, req.choice, req.rt_ms)).await?;
    Ok(Json(json!({ "ok": true })))
}

async fn export(
    State(store): State<Arc<Store>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let table = store.export(&id)?;
    Ok((
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
        table.to_csv(),
    )
        .into_response())
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "ok": true }))
}

/// The API under `/api`, plus static files from `static_dir` at the root if
/// given.
pub fn router(store: Arc<Store>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/healthz", get(healthz))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/responses", post(post_response))
        .route("/api/sets/{id}/export", get(export))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
