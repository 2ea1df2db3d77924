use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Utc;

use super::{
    check_batch, download_all, file_name, Credentials, SessionTable, UploadReceipt, Worker,
    WorkerDescriptor, WorkerError, WorkerSession,
};
use crate::platformsim::{Platform, PlatformError};

/// Worker talking to an in-process [`Platform`].
#[derive(Debug)]
pub struct SimWorker {
    descriptor: WorkerDescriptor,
    platform: Arc<Platform>,
    sessions: SessionTable,
}

impl SimWorker {
    pub fn new(descriptor: WorkerDescriptor, platform: Arc<Platform>) -> Self {
        Self {
            descriptor,
            platform,
            sessions: SessionTable::default(),
        }
    }
}

fn map_err(e: PlatformError, path: &Path) -> WorkerError {
    match e {
        PlatformError::Unauthorized => WorkerError::Auth("session token rejected".into()),
        PlatformError::RateLimited { retry_after_s } => WorkerError::RateLimited {
            retry_after_s: Some(retry_after_s),
        },
        PlatformError::InvalidMedia(reason) => WorkerError::Rejected {
            path: path.to_path_buf(),
            reason,
        },
        PlatformError::NotFound => WorkerError::NotFound(path.display().to_string()),
    }
}

impl Worker for SimWorker {
    fn descriptor(&self) -> &WorkerDescriptor {
        &self.descriptor
    }

    fn connect(&mut self, credentials: &Credentials) -> Result<WorkerSession, WorkerError> {
        let token = self
            .platform
            .login(&credentials.user, &credentials.pass)
            .map_err(|_| WorkerError::Auth(format!("{} rejected the login", self.descriptor.platform_code)))?;
        Ok(self.sessions.open(&self.descriptor.platform_code, token))
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
            let outcome = fs::read(path)
                .map_err(|e| WorkerError::Rejected {
                    path: path.clone(),
                    reason: format!("unreadable: {e}"),
                })
                .and_then(|bytes| {
                    self.platform
                        .upload(&token, &file_name(path), &bytes)
                        .map_err(|e| map_err(e, path))
                });
            match outcome {
                Ok(media_id) => {
                    log::debug!("{}: uploaded {} as {media_id}", self.descriptor.platform_code, path.display());
                    receipts.push(UploadReceipt {
                        media_id,
                        source_path: path.clone(),
                        uploaded_at: Utc::now(),
                    });
                }
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
        download_all(receipts, dest_dir, |r| match self.platform.fetch(&token, &r.media_id) {
            Ok(bytes) => Ok(bytes.as_ref().clone()),
            Err(PlatformError::NotFound) => Err(WorkerError::NotFound(r.media_id.clone())),
            Err(e) => Err(map_err(e, &r.source_path)),
        })
    }

    fn disconnect(&mut self, session: &WorkerSession) {
        if let Some(token) = self.sessions.close(session) {
            self.platform.logout(&token);
        }
    }
}
