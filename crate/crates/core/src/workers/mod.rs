//! Platform worker contract.
//!
//! A worker integrates one platform through four calls: `connect`,
//! `upload_proc`, `download_proc` and `disconnect`. The engine never sees
//! anything else, so adding a platform means adding a [`Worker`] impl and
//! registering it.

mod catalog;
mod http;
mod registry;
mod sim;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{builtin_profiles, builtin_registry, CatalogError, PlatformDef, PlatformsFile};
pub use http::HttpWorker;
pub use registry::{RegistryError, WorkerFactory, WorkerRegistry};
pub use sim::SimWorker;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerDescriptor {
    pub platform_code: String,
    pub default_pool_size: u32,
    pub supports_multi_pic: bool,
}

/// Login material. Opaque to the engine; `Debug` hides the secret.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Credentials {
    pub user: String,
    pub pass: String,
}

impl Credentials {
    pub fn new(user: impl Into<String>, pass: impl Into<String>) -> Self {
        Self {
            user: user.into(),
            pass: pass.into(),
        }
    }

    /// `BP_<CODE>_USER` / `BP_<CODE>_PASS`, empty when unset.
    pub fn from_env(platform_code: &str) -> Self {
        let var = |suffix| std::env::var(format!("BP_{platform_code}_{suffix}")).unwrap_or_default();
        Self::new(var("USER"), var("PASS"))
    }
}

impl fmt::Debug for Credentials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Credentials")
            .field("user", &self.user)
            .field("pass", &"***")
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerSession {
    pub handle: String,
    pub platform_code: String,
    pub connected_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadReceipt {
    pub media_id: String,
    pub source_path: PathBuf,
    pub uploaded_at: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum WorkerError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("network issue: {0}")]
    Network(String),
    #[error("rate limited{}", .retry_after_s.map(|s| format!(", retry after {s} s")).unwrap_or_default())]
    RateLimited { retry_after_s: Option<u64> },
    /// The first `receipts.len()` pictures of the batch went through.
    #[error("partial upload ({} succeeded): {cause}", .receipts.len())]
    PartialUpload {
        receipts: Vec<UploadReceipt>,
        cause: Box<WorkerError>,
    },
    /// One picture was refused or unreadable; not a platform-wide problem.
    #[error("{}: rejected: {reason}", .path.display())]
    Rejected { path: PathBuf, reason: String },
    #[error("media not found: {0}")]
    NotFound(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub trait Worker: Send {
    fn descriptor(&self) -> &WorkerDescriptor;

    fn connect(&mut self, credentials: &Credentials) -> Result<WorkerSession, WorkerError>;

    /// One receipt per picture, in batch order.
    fn upload_proc(
        &mut self,
        session: &WorkerSession,
        batch: &[PathBuf],
    ) -> Result<Vec<UploadReceipt>, WorkerError>;

    /// Writes `<media_id>.jpg` per receipt into `dest_dir`, all or nothing.
    fn download_proc(
        &mut self,
        session: &WorkerSession,
        receipts: &[UploadReceipt],
        dest_dir: &Path,
    ) -> Result<Vec<PathBuf>, WorkerError>;

    /// Best effort and idempotent.
    fn disconnect(&mut self, session: &WorkerSession);
}

/// Bookkeeping shared by worker impls: which sessions are live, batch checks,
/// and atomic all-or-nothing downloads.
#[derive(Debug, Default)]
pub(crate) struct SessionTable {
    live: std::collections::HashMap<String, String>,
}

impl SessionTable {
    pub(crate) fn open(&mut self, code: &str, platform_token: String) -> WorkerSession {
        let handle = uuid::Uuid::new_v4().simple().to_string();
        self.live.insert(handle.clone(), platform_token);
        WorkerSession {
            handle,
            platform_code: code.to_string(),
            connected_at: Utc::now(),
        }
    }

    /// Platform token for a live session of this worker.
    pub(crate) fn token(&self, desc: &WorkerDescriptor, s: &WorkerSession) -> Result<String, WorkerError> {
        if s.platform_code != desc.platform_code {
            return Err(WorkerError::ContractViolation(format!(
                "session of {} used with {} worker",
                s.platform_code, desc.platform_code
            )));
        }
        self.live.get(&s.handle).cloned().ok_or_else(|| {
            WorkerError::ContractViolation("session is not connected".into())
        })
    }

    pub(crate) fn close(&mut self, s: &WorkerSession) -> Option<String> {
        self.live.remove(&s.handle)
    }
}

pub(crate) fn check_batch(desc: &WorkerDescriptor, batch: &[PathBuf]) -> Result<(), WorkerError> {
    if batch.is_empty() {
        return Err(WorkerError::ContractViolation("empty upload batch".into()));
    }
    if batch.len() > 1 && !desc.supports_multi_pic {
        return Err(WorkerError::ContractViolation(format!(
            "{} does not support multi-picture sends (batch of {})",
            desc.platform_code,
            batch.len()
        )));
    }
    Ok(())
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unnamed.jpg".into())
}

/// Downloads each receipt through `fetch` and writes it atomically. On any
/// failure, files already written by this call are removed.
pub(crate) fn download_all<F>(
    receipts: &[UploadReceipt],
    dest_dir: &Path,
    mut fetch: F,
) -> Result<Vec<PathBuf>, WorkerError>
where
    F: FnMut(&UploadReceipt) -> Result<Vec<u8>, WorkerError>,
{
    let mut written: Vec<PathBuf> = Vec::with_capacity(receipts.len());
    let result = (|| {
        for r in receipts {
            if r.media_id.is_empty() || r.media_id.contains(['/', '\\']) || r.media_id.starts_with('.') {
                return Err(WorkerError::NotFound(r.media_id.clone()));
            }
            let bytes = fetch(r)?;
            let path = dest_dir.join(format!("{}.jpg", r.media_id));
            write_atomic(&path, &bytes).map_err(|source| WorkerError::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// Write to a hidden temp name in the same directory, fsync, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
