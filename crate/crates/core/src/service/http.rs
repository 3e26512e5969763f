use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::services::ServeDir;

use super::{parse_config, parse_result, ErrorKind, ServiceError, SessionStore};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Conflict => StatusCode::CONFLICT,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({ "error": { "field": self.field, "message": self.message } });
        (status, Json(body)).into_response()
    }
}

type AppState = Arc<SessionStore>;

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(State(store): State<AppState>, body: Bytes) -> Response {
    match parse_config(&body).and_then(|c| store.create(c)) {
        Ok(view) => (StatusCode::CREATED, Json(view)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn record_result(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    match parse_result(&body).and_then(|r| store.record(&id, r)) {
        Ok(view) => Json(view).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> Response {
    match store.view(&id) {
        Ok(view) => Json(view).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn undo_last(State(store): State<AppState>, Path(id): Path<String>) -> Response {
    match store.undo(&id) {
        Ok(view) => Json(view).into_response(),
        Err(e) => e.into_response(),
    }
}

/// HTTP routes over a session store; `static_dir`, when given, is served at `/`.
pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/results", post(record_result))
        .route("/sessions/{id}/undo", post(undo_last))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Runs the service until Ctrl-C.
pub async fn serve(
    addr: SocketAddr,
    data_dir: PathBuf,
    static_dir: Option<PathBuf>,
) -> crate::Result<()> {
    let store = Arc::new(SessionStore::open(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "listening on http://{} ({} sessions loaded)",
        listener.local_addr()?,
        store.len()
    );
    axum::serve(listener, router(store, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
