//! HTTP front end for an [`AnnotationStore`].

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use moralscope_core::annotation::store::{
    AnnotationItem, AnnotationStore, AuditEntry, Progress, SessionInfo, StoreError, Submission,
};
use moralscope_core::annotation::LabelExport;
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

pub type SharedStore = Arc<Mutex<AnnotationStore>>;

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::UnknownRater(_) | StoreError::UnknownItem(_) => StatusCode::NOT_FOUND,
            StoreError::InvalidSession(_) => StatusCode::BAD_REQUEST,
            StoreError::Log { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
struct RaterQuery {
    rater: Option<String>,
}

impl RaterQuery {
    fn rater(self) -> Result<String, ApiError> {
        self.rater
            .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "missing `rater` query parameter".into()))
    }
}

fn lock(store: &SharedStore) -> std::sync::MutexGuard<'_, AnnotationStore> {
    store.lock().unwrap_or_else(|p| p.into_inner())
}

async fn session(State(store): State<SharedStore>, Query(q): Query<RaterQuery>) -> Result<Json<SessionInfo>, ApiError> {
    let rater = q.rater()?;
    Ok(Json(lock(&store).session(&rater)?))
}

async fn next_item(State(store): State<SharedStore>, Query(q): Query<RaterQuery>) -> Result<Response, ApiError> {
    let rater = q.rater()?;
    let store = lock(&store);
    Ok(match store.next_item(&rater)? {
        Some(item) => Json::<AnnotationItem>(item.clone()).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn submit(
    State(store): State<SharedStore>,
    body: Result<Json<Submission>, JsonRejection>,
) -> Result<(StatusCode, Json<AuditEntry>), ApiError> {
    let Json(submission) = body.map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
    let entry = lock(&store).submit(&submission)?;
    log::debug!("label {} by {}: {}", entry.item_id, entry.rater, entry.choice.token());
    Ok((StatusCode::CREATED, Json(entry)))
}

async fn progress(State(store): State<SharedStore>) -> Json<BTreeMap<String, Progress>> {
    Json(lock(&store).progress())
}

async fn export(State(store): State<SharedStore>) -> Json<LabelExport> {
    Json(lock(&store).export())
}

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/api/session", get(session))
        .route("/api/items/next", get(next_item))
        .route("/api/labels", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(store)
}

/// Serves until the process exits.
pub async fn serve(store: SharedStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}

/// A server running on its own runtime thread, stopped on drop.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) {
        self.shutdown_now();
    }

    fn shutdown_now(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown_now();
    }
}

/// Starts `app` on `addr` (port 0 picks a free port) in a background thread.
pub fn spawn_router(app: Router, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let result = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
            if let Err(e) = result {
                log::error!("server stopped: {e}");
            }
        });
    });
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

pub fn spawn(store: SharedStore, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    spawn_router(router(store), addr)
}
