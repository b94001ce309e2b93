use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::sync::oneshot;
use tower_http::services::ServeDir;

use crate::desk::{RatingDesk, RatingSubmission, Rejection};

/// Longest long poll a client may request.
pub const MAX_WAIT_MS: u64 = 60_000;

#[derive(Debug, Deserialize)]
struct StepQuery {
    after: Option<u64>,
    wait_ms: Option<u64>,
}

async fn get_step(State(desk): State<Arc<RatingDesk>>, Query(q): Query<StepQuery>) -> Response {
    let Some(after) = q.after else {
        return Json(desk.current_step()).into_response();
    };
    let wait = Duration::from_millis(q.wait_ms.unwrap_or(25_000).min(MAX_WAIT_MS));
    match tokio::task::spawn_blocking(move || desk.wait_for_step(after, wait)).await {
        Ok(view) => Json(view).into_response(),
        Err(_) => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    }
}

async fn post_rating(State(desk): State<Arc<RatingDesk>>, Json(sub): Json<RatingSubmission>) -> Response {
    match desk.submit_rating(&sub) {
        Ok(ack) => Json(ack).into_response(),
        Err(rej @ Rejection::StaleStep { .. }) => (StatusCode::CONFLICT, Json(rej)).into_response(),
        Err(rej @ Rejection::InvalidStars { .. }) => {
            (StatusCode::UNPROCESSABLE_ENTITY, Json(rej)).into_response()
        }
    }
}

async fn get_progress(State(desk): State<Arc<RatingDesk>>) -> Response {
    Json(desk.progress()).into_response()
}

/// API routes, plus the static rating UI at `/` when `ui_dir` is given.
pub fn router(desk: Arc<RatingDesk>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/step", get(get_step))
        .route("/api/rating", post(post_rating))
        .route("/api/progress", get(get_progress))
        .with_state(desk);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Server running on its own runtime thread.
pub struct ServerHandle {
    addr: SocketAddr,
    desk: Arc<RatingDesk>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Finishes the desk (waking long polls) and stops the server.
    pub fn stop(mut self) {
        self.shutdown_now();
    }

    fn shutdown_now(&mut self) {
        self.desk.finish();
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

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub fn spawn_server(
    desk: Arc<RatingDesk>,
    addr: SocketAddr,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let (tx, rx) = oneshot::channel();
    let app = router(desk.clone(), ui_dir);
    let thread = std::thread::Builder::new()
        .name("hitl-http".into())
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(std_listener) {
                    Ok(l) => l,
                    Err(e) => {
                        eprintln!("rating server failed to start: {e}");
                        return;
                    }
                };
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        })?;
    Ok(ServerHandle {
        addr,
        desk,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
