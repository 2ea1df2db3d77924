use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::Utc;
use reqwest::blocking::Client;
use reqwest::header::{AUTHORIZATION, CONTENT_TYPE, RETRY_AFTER};
use reqwest::StatusCode;
use serde::Deserialize;

use super::{
    check_batch, download_all, file_name, Credentials, SessionTable, UploadReceipt, Worker,
    WorkerDescriptor, WorkerError, WorkerSession,
};

/// Worker for a platform speaking the loopback platform protocol over HTTP.
#[derive(Debug)]
pub struct HttpWorker {
    descriptor: WorkerDescriptor,
    base_url: String,
    client: Client,
    sessions: SessionTable,
}

#[derive(Deserialize)]
struct TokenBody {
    token: String,
}

#[derive(Deserialize)]
struct MediaBody {
    media_id: String,
}

fn net(e: reqwest::Error) -> WorkerError {
    WorkerError::Network(e.to_string())
}

impl HttpWorker {
    pub fn new(descriptor: WorkerDescriptor, base_url: impl Into<String>) -> Self {
        let client = Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .expect("http client builds");
        Self {
            descriptor,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            client,
            sessions: SessionTable::default(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base_url)
    }

    fn upload_one(&self, token: &str, path: &Path) -> Result<String, WorkerError> {
        let bytes = fs::read(path).map_err(|e| WorkerError::Rejected {
            path: path.to_path_buf(),
            reason: format!("unreadable: {e}"),
        })?;
        let url = self.url("/api/upload");
        log::debug!("POST {url} ({} bytes, {})", bytes.len(), path.display());
        let resp = self
            .client
            .post(&url)
            .header(AUTHORIZATION, format!("Bearer {token}"))
            .header("X-Filename", file_name(path))
            .header(CONTENT_TYPE, "image/jpeg")
            .body(bytes)
            .send()
            .map_err(net)?;
        let status = resp.status();
        log::debug!("POST {url} -> {status}");
        match status {
            StatusCode::CREATED | StatusCode::OK => {
                let body: MediaBody = resp
                    .json_body()
                    .map_err(|e| WorkerError::Network(format!("bad upload response: {e}")))?;
                if body.media_id.is_empty() {
                    return Err(WorkerError::Network("empty media_id".into()));
                }
                Ok(body.media_id)
            }
            StatusCode::TOO_MANY_REQUESTS => Err(WorkerError::RateLimited {
                retry_after_s: resp
                    .headers()
                    .get(RETRY_AFTER)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse().ok()),
            }),
            StatusCode::UNAUTHORIZED => Err(WorkerError::Auth("upload unauthorized".into())),
            StatusCode::UNPROCESSABLE_ENTITY => Err(WorkerError::Rejected {
                path: path.to_path_buf(),
                reason: resp.text().unwrap_or_default(),
            }),
            other => Err(WorkerError::Network(format!("unexpected upload status {other}"))),
        }
    }
}

trait JsonBody {
    fn json_body<T: for<'de> Deserialize<'de>>(self) -> Result<T, String>;
}

impl JsonBody for reqwest::blocking::Response {
    fn json_body<T: for<'de> Deserialize<'de>>(self) -> Result<T, String> {
        let bytes = self.bytes().map_err(|e| e.to_string())?;
        serde_json::from_slice(&bytes).map_err(|e| e.to_string())
    }
}

impl Worker for HttpWorker {
    fn descriptor(&self) -> &WorkerDescriptor {
        &self.descriptor
    }

    fn connect(&mut self, credentials: &Credentials) -> Result<WorkerSession, WorkerError> {
        let url = self.url("/api/login");
        log::debug!("POST {url}");
        let resp = self
            .client
            .post(&url)
            .header(CONTENT_TYPE, "application/json")
            .body(serde_json::json!({"user": credentials.user, "pass": credentials.pass}).to_string())
            .send()
            .map_err(net)?;
        log::debug!("POST {url} -> {}", resp.status());
        match resp.status() {
            StatusCode::OK => {
                let body: TokenBody = resp
                    .json_body()
                    .map_err(|e| WorkerError::Network(format!("bad login response: {e}")))?;
                Ok(self.sessions.open(&self.descriptor.platform_code, body.token))
            }
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Err(WorkerError::Auth(format!(
                "{} rejected the login",
                self.descriptor.platform_code
            ))),
            other => Err(WorkerError::Network(format!("unexpected login status {other}"))),
        }
    }

    fn upload_proc(
        &mut self,
        session: &WorkerSession,
        batch: &[PathBuf],
    ) -> Result<Vec<UploadReceipt>, WorkerError> {
        let token = self.sessions.token(&self.descriptor, session)?;
        check_batch(&self.descriptor, batch)?;
        let mut receipts = Vec::with_capacity(batch.len());
        for path in batch {
            match self.upload_one(&token, path) {
                Ok(media_id) => receipts.push(UploadReceipt {
                    media_id,
                    source_path: path.clone(),
                    uploaded_at: Utc::now(),
                }),
                Err(e) if receipts.is_empty() => return Err(e),
                Err(e) => {
                    return Err(WorkerError::PartialUpload {
                        receipts,
                        cause: Box::new(e),
                    })
                }
            }
        }
        Ok(receipts)
    }

    fn download_proc(
        &mut self,
        session: &WorkerSession,
        receipts: &[UploadReceipt],
        dest_dir: &Path,
    ) -> Result<Vec<PathBuf>, WorkerError> {
        let token = self.sessions.token(&self.descriptor, session)?;
        let client = self.client.clone();
        let base = self.base_url.clone();
        download_all(receipts, dest_dir, |r| {
            let url = format!("{base}/api/media/{}", r.media_id);
            log::debug!("GET {url}");
            let resp = client
                .get(&url)
                .header(AUTHORIZATION, format!("Bearer {token}"))
                .send()
                .map_err(net)?;
            log::debug!("GET {url} -> {}", resp.status());
            match resp.status() {
                StatusCode::OK => Ok(resp.bytes().map_err(net)?.to_vec()),
                StatusCode::NOT_FOUND => Err(WorkerError::NotFound(r.media_id.clone())),
                StatusCode::UNAUTHORIZED => Err(WorkerError::Auth("download unauthorized".into())),
                other => Err(WorkerError::Network(format!("unexpected download status {other}"))),
            }
        })
    }

    fn disconnect(&mut self, session: &WorkerSession) {
        // the protocol has no logout endpoint; dropping the token ends the session
        self.sessions.close(session);
    }
}
