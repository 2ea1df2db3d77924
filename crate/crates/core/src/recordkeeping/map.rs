use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::RecordError;
use crate::config::TaskId;
use crate::jpegtools::{ExifSummary, QuantTable};

/// Provenance of one picture produced (or not) by a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobMapEntry {
    pub task_id: TaskId,
    /// Relative to the job root, e.g. `MASTD@0/mastd-1f3c....jpg`. Empty on failure.
    pub produced_path: String,
    /// Absolute for dataset pictures, job-root relative for pipelined ones.
    pub source_path: String,
    pub source_sha256: Option<String>,
    pub media_id: Option<String>,
    pub failure: bool,
    pub failure_reason: Option<String>,
    pub exif: ExifSummary,
    pub sha256: Option<String>,
    pub quant_tables: Option<Vec<QuantTable>>,
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
    pub byte_size: Option<u64>,
    pub mime: Option<String>,
    pub uploaded_at: Option<DateTime<Utc>>,
    pub downloaded_at: Option<DateTime<Utc>>,
}

impl JobMapEntry {
    pub fn failed(task_id: TaskId, source_path: String, source_sha256: Option<String>, reason: String) -> Self {
        Self {
            task_id,
            produced_path: String::new(),
            source_path,
            source_sha256,
            media_id: None,
            failure: true,
            failure_reason: Some(reason),
            exif: ExifSummary::default(),
            sha256: None,
            quant_tables: None,
            width_px: None,
            height_px: None,
            byte_size: None,
            mime: None,
            uploaded_at: None,
            downloaded_at: None,
        }
    }

    pub fn check(&self) -> Result<(), RecordError> {
        let bad = |m: &str| Err(RecordError::ContractViolation(format!("{}: {m}", self.task_id)));
        if self.failure {
            if !self.produced_path.is_empty()
                || self.sha256.is_some()
                || self.quant_tables.is_some()
                || self.width_px.is_some()
                || self.height_px.is_some()
                || self.byte_size.is_some()
            {
                return bad("failed entry carries produced-picture fields");
            }
            return Ok(());
        }
        let prefix = format!("{}/", self.task_id);
        let Some(name) = self.produced_path.strip_prefix(&prefix) else {
            return bad("produced_path is not inside the task directory");
        };
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return bad("produced_path is not a plain file name");
        }
        if self.sha256.is_none()
            || self.quant_tables.is_none()
            || self.width_px.is_none()
            || self.height_px.is_none()
            || self.byte_size.is_none()
        {
            return bad("successful entry lacks digest, tables or dimensions");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok_entry() -> JobMapEntry {
        JobMapEntry {
            task_id: "AB@0".parse().unwrap(),
            produced_path: "AB@0/x.jpg".into(),
            source_path: "/src/a.jpg".into(),
            source_sha256: Some("00".into()),
            media_id: Some("x".into()),
            failure: false,
            failure_reason: None,
            exif: ExifSummary::default(),
            sha256: Some("ff".into()),
            quant_tables: Some(vec![]),
            width_px: Some(1),
            height_px: Some(1),
            byte_size: Some(10),
            mime: Some("image/jpeg".into()),
            uploaded_at: None,
            downloaded_at: None,
        }
    }

    #[test]
    fn invariants() {
        assert!(ok_entry().check().is_ok());
        let f = JobMapEntry::failed("AB@0".parse().unwrap(), "/s".into(), None, "gone".into());
        assert!(f.check().is_ok());

        let mut e = ok_entry();
        e.failure = true;
        assert!(matches!(e.check(), Err(RecordError::ContractViolation(_))));

        for p in ["CD@0/x.jpg", "AB@0/", "AB@0/../x.jpg", "x.jpg", "AB@0/.tmp"] {
            let mut e = ok_entry();
            e.produced_path = p.into();
            assert!(e.check().is_err(), "{p}");
        }
        let mut e = ok_entry();
        e.sha256 = None;
        assert!(e.check().is_err());
    }
}
