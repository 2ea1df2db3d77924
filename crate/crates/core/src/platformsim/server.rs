//! HTTP front end for a [`Platform`].
//!
//! | request | response |
//! |---|---|
//! | `POST /api/login` `{"user","pass"}` | 200 `{"token"}` / 401 |
//! | `POST /api/upload` (Bearer auth, `X-Filename`, raw JPEG body) | 201 `{"media_id"}` / 429 + `Retry-After` / 401 / 422 |
//! | `GET /api/media/{id}` (Bearer auth) | 200 `image/jpeg` / 404 / 401 |
//! | `GET /api/health` | 200 |

use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;
use tokio::sync::oneshot;

use super::{Platform, PlatformError, ProfileError, TransformProfile};

const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("cannot start service runtime: {0}")]
    Runtime(std::io::Error),
}

/// Running service. Dropping the handle shuts the service down.
pub struct ServiceHandle {
    addr: SocketAddr,
    platform: Arc<Platform>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }

    /// Blocks until the service thread has exited.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Serves a fresh platform for `profile` (system clock, any login accepted).
pub fn serve(profile: TransformProfile, bind: SocketAddr) -> Result<ServiceHandle, ServeError> {
    profile.validate()?;
    serve_platform(Arc::new(Platform::with_system_clock(profile)), bind)
}

pub fn serve_platform(platform: Arc<Platform>, bind: SocketAddr) -> Result<ServiceHandle, ServeError> {
    let listener = TcpListener::bind(bind).map_err(|source| ServeError::Bind { addr: bind, source })?;
    let addr = listener
        .local_addr()
        .map_err(|source| ServeError::Bind { addr: bind, source })?;
    listener
        .set_nonblocking(true)
        .map_err(|source| ServeError::Bind { addr: bind, source })?;

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(ServeError::Runtime)?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(Arc::clone(&platform));

    let thread = std::thread::Builder::new()
        .name(format!("platformsim-{addr}"))
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        log::error!("platformsim listener: {e}");
                        return;
                    }
                };
                let shutdown = async {
                    let _ = rx.await;
                };
                if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
                    log::error!("platformsim server: {e}");
                }
            });
            runtime.shutdown_background();
        })
        .map_err(ServeError::Runtime)?;

    Ok(ServiceHandle {
        addr,
        platform,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

fn router(platform: Arc<Platform>) -> Router {
    Router::new()
        .route("/api/health", get(|| async { "ok" }))
        .route("/api/login", post(login))
        .route("/api/upload", post(upload))
        .route("/api/media/{id}", get(media))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(platform)
}

#[derive(Deserialize)]
struct LoginBody {
    user: String,
    pass: String,
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

fn error_response(e: PlatformError) -> Response {
    let body = Json(json!({ "error": e.to_string() }));
    match e {
        PlatformError::Unauthorized => (StatusCode::UNAUTHORIZED, body).into_response(),
        PlatformError::NotFound => (StatusCode::NOT_FOUND, body).into_response(),
        PlatformError::InvalidMedia(_) => (StatusCode::UNPROCESSABLE_ENTITY, body).into_response(),
        PlatformError::RateLimited { retry_after_s } => (
            StatusCode::TOO_MANY_REQUESTS,
            [(header::RETRY_AFTER, retry_after_s.to_string())],
            body,
        )
            .into_response(),
    }
}

async fn login(State(p): State<Arc<Platform>>, body: Bytes) -> Response {
    let Ok(req) = serde_json::from_slice::<LoginBody>(&body) else {
        return (StatusCode::BAD_REQUEST, Json(json!({"error": "expected {\"user\", \"pass\"}"})))
            .into_response();
    };
    match p.login(&req.user, &req.pass) {
        Ok(token) => (StatusCode::OK, Json(json!({ "token": token }))).into_response(),
        Err(e) => error_response(e),
    }
}

async fn upload(State(p): State<Arc<Platform>>, headers: HeaderMap, body: Bytes) -> Response {
    let Some(token) = bearer(&headers).map(str::to_owned) else {
        return error_response(PlatformError::Unauthorized);
    };
    let filename = headers
        .get("x-filename")
        .and_then(|v| v.to_str().ok())
        .unwrap_or("unnamed")
        .to_owned();
    let res = tokio::task::spawn_blocking(move || p.upload(&token, &filename, &body)).await;
    match res {
        Ok(Ok(media_id)) => (StatusCode::CREATED, Json(json!({ "media_id": media_id }))).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn media(State(p): State<Arc<Platform>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    let Some(token) = bearer(&headers) else {
        return error_response(PlatformError::Unauthorized);
    };
    match p.fetch(token, &id) {
        Ok(bytes) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, "image/jpeg")],
            bytes.as_ref().clone(),
        )
            .into_response(),
        Err(e) => error_response(e),
    }
}
