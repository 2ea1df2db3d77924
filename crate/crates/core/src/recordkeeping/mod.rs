//! On-disk job artifacts.
//!
//! ```text
//! <base>/job_20240518T101500Z_k3x9/
//!     config_snapshot.json   exact copy of the job config
//!     job_status.json        per-task state and counters, rewritten atomically
//!     job_map.jsonl          one provenance entry per line, append-only, fsynced
//!     job_map.json           consolidated array, written when the job finishes
//!     MASTD@0/               pictures produced by task MASTD@0
//!     REDDT@0/               ...
//! ```
//!
//! A crash can leave at most one partial line at the end of `job_map.jsonl`
//! (dropped on load) and stray files in task directories that no successful
//! entry references (removed by [`reconcile_task_dirs`]).

mod map;
mod status;

use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::Utc;
use rand::distr::{Alphanumeric, SampleString};
use thiserror::Error;

use crate::config::{parse_config, JobConfig, TaskId};
use crate::planner::ExecutionPlan;

pub use map::JobMapEntry;
pub use status::{JobStatus, StatusDelta, TaskState, TaskStatus};

pub const CONFIG_SNAPSHOT: &str = "config_snapshot.json";
pub const JOB_STATUS: &str = "job_status.json";
pub const JOB_MAP_LINES: &str = "job_map.jsonl";
pub const JOB_MAP_JSON: &str = "job_map.json";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o error on {}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt job state in {}: {reason}", .root.display())]
    CorruptState { root: PathBuf, reason: String },
    #[error("illegal transition for {task}: {from:?} -> {to:?}")]
    IllegalTransition {
        task: TaskId,
        from: TaskState,
        to: TaskState,
    },
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RecordError + '_ {
    move |source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Test hook: aborts the process when the n-th crash site is reached.
#[doc(hidden)]
#[derive(Debug)]
pub struct CrashHook {
    remaining: AtomicU64,
}

#[doc(hidden)]
impl CrashHook {
    pub fn after(sites: u64) -> Self {
        Self {
            remaining: AtomicU64::new(sites.max(1)),
        }
    }

    /// True exactly once, at the configured site.
    pub fn tick(&self) -> bool {
        self.remaining
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok_and(|prev| prev == 1)
    }

    pub fn crash(&self) -> ! {
        eprintln!("crash hook: aborting");
        std::process::abort()
    }
}

fn write_atomic(path: &Path, bytes: &[u8], crash: Option<&CrashHook>) -> Result<(), RecordError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    if let Some(c) = crash {
        if c.tick() {
            c.crash();
        }
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_status(root: &Path, status: &JobStatus, crash: Option<&CrashHook>) -> Result<(), RecordError> {
    let text = serde_json::to_vec_pretty(status).expect("status serializes");
    write_atomic(&root.join(JOB_STATUS), &text, crash)
}

/// Creates `<base_dir>/job_<UTC timestamp>_<suffix>/` with one directory per
/// task, the config snapshot, an empty job map and the initial status.
pub fn init_job_root(base_dir: &Path, config_text: &str, plan: &ExecutionPlan) -> Result<PathBuf, RecordError> {
    fs::create_dir_all(base_dir).map_err(io_err(base_dir))?;
    let stamp = Utc::now().format("%Y%m%dT%H%M%SZ");
    let mut attempts = 0;
    let root = loop {
        let suffix = Alphanumeric.sample_string(&mut rand::rng(), 4).to_ascii_lowercase();
        let candidate = base_dir.join(format!("job_{stamp}_{suffix}"));
        match fs::create_dir(&candidate) {
            Ok(()) => break candidate,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists && attempts < 16 => attempts += 1,
            Err(e) => return Err(io_err(&candidate)(e)),
        }
    };
    for t in &plan.order {
        let d = root.join(t.to_string());
        fs::create_dir(&d).map_err(io_err(&d))?;
    }
    let snap = root.join(CONFIG_SNAPSHOT);
    fs::write(&snap, config_text).map_err(io_err(&snap))?;
    let map = root.join(JOB_MAP_LINES);
    File::create(&map).map_err(io_err(&map))?;
    let job_id = root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_status(&root, &JobStatus::new(job_id, plan.clone()), None)?;
    Ok(root)
}

/// Everything needed to continue a job.
#[derive(Debug, Clone)]
pub struct LoadedState {
    pub config_text: String,
    pub config: JobConfig,
    pub status: JobStatus,
    pub entries: Vec<JobMapEntry>,
    /// A partial final map line was found and dropped.
    pub dropped_partial_line: bool,
}

impl LoadedState {
    pub fn plan(&self) -> &ExecutionPlan {
        &self.status.plan
    }

    /// (task, source digest) of every successful entry.
    pub fn successful_keys(&self) -> BTreeSet<(TaskId, String)> {
        self.entries
            .iter()
            .filter(|e| !e.failure)
            .filter_map(|e| Some((e.task_id.clone(), e.source_sha256.clone()?)))
            .collect()
    }
}

/// Parse the job map, dropping (and truncating away) a partial last line.
fn read_map(root: &Path, repair: bool) -> Result<(Vec<JobMapEntry>, bool), RecordError> {
    let path = root.join(JOB_MAP_LINES);
    let bytes = fs::read(&path).map_err(|e| RecordError::CorruptState {
        root: root.to_path_buf(),
        reason: format!("cannot read {JOB_MAP_LINES}: {e}"),
    })?;
    let mut entries = Vec::new();
    let mut offset = 0usize;
    let mut dropped = false;
    while offset < bytes.len() {
        let (line, next, complete) = match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(i) => (&bytes[offset..offset + i], offset + i + 1, true),
            None => (&bytes[offset..], bytes.len(), false),
        };
        if line.iter().all(u8::is_ascii_whitespace) {
            offset = next;
            continue;
        }
        match serde_json::from_slice::<JobMapEntry>(line) {
            Ok(e) if complete => entries.push(e),
            parsed => {
                if next < bytes.len() {
                    return Err(RecordError::CorruptState {
                        root: root.to_path_buf(),
                        reason: format!("unparseable job map line at byte {offset}"),
                    });
                }
                log::warn!(
                    "{}: dropping partial final job map line ({})",
                    path.display(),
                    parsed.err().map(|e| e.to_string()).unwrap_or_else(|| "no newline".into())
                );
                dropped = true;
                if repair {
                    let f = OpenOptions::new().write(true).open(&path).map_err(io_err(&path))?;
                    f.set_len(offset as u64).map_err(io_err(&path))?;
                    f.sync_all().map_err(io_err(&path))?;
                }
                break;
            }
        }
        offset = next;
    }
    Ok((entries, dropped))
}

fn load(root: &Path, repair: bool) -> Result<LoadedState, RecordError> {
    let corrupt = |reason: String| RecordError::CorruptState {
        root: root.to_path_buf(),
        reason,
    };
    if !root.is_dir() {
        return Err(corrupt("job root does not exist".into()));
    }
    let config_text = fs::read_to_string(root.join(CONFIG_SNAPSHOT))
        .map_err(|e| corrupt(format!("config snapshot: {e}")))?;
    let config = parse_config(&config_text).map_err(|e| corrupt(format!("config snapshot: {e}")))?;
    let status_text =
        fs::read_to_string(root.join(JOB_STATUS)).map_err(|e| corrupt(format!("status file: {e}")))?;
    let status: JobStatus =
        serde_json::from_str(&status_text).map_err(|e| corrupt(format!("status file: {e}")))?;
    let (entries, dropped_partial_line) = read_map(root, repair)?;
    Ok(LoadedState {
        config_text,
        config,
        status,
        entries,
        dropped_partial_line,
    })
}

/// Read-only load; a partial final map line is ignored but left on disk.
pub fn load_state(root: &Path) -> Result<LoadedState, RecordError> {
    load(root, false)
}

/// Load for resumption: also truncates a partial final map line.
pub fn load_state_for_resume(root: &Path) -> Result<LoadedState, RecordError> {
    load(root, true)
}

/// Removes files in task directories that no successful entry references
/// (downloads whose map append never happened, stale temp files).
pub fn reconcile_task_dirs(root: &Path, plan: &ExecutionPlan, entries: &[JobMapEntry]) -> Result<usize, RecordError> {
    let keep: HashSet<&str> = entries
        .iter()
        .filter(|e| !e.failure)
        .map(|e| e.produced_path.as_str())
        .collect();
    let mut removed = 0;
    for t in &plan.order {
        let dir = root.join(t.to_string());
        if !dir.is_dir() {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            continue;
        }
        for item in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let item = item.map_err(io_err(&dir))?;
            let rel = format!("{t}/{}", item.file_name().to_string_lossy());
            if !keep.contains(rel.as_str()) && item.file_type().map(|f| f.is_file()).unwrap_or(false) {
                log::info!("removing unrecorded file {rel}");
                fs::remove_file(item.path()).map_err(io_err(&item.path()))?;
                removed += 1;
            }
        }
    }
    Ok(removed)
}

struct Inner {
    map: File,
    status: JobStatus,
    entries: Vec<JobMapEntry>,
}

/// Single writer for a job's map and status. Shared across task threads;
/// every operation is serialized and durable when it returns.
pub struct Recorder {
    root: PathBuf,
    inner: Mutex<Inner>,
    crash: Option<Arc<CrashHook>>,
}

impl Recorder {
    pub fn open(
        root: &Path,
        status: JobStatus,
        entries: Vec<JobMapEntry>,
        crash: Option<Arc<CrashHook>>,
    ) -> Result<Self, RecordError> {
        let path = root.join(JOB_MAP_LINES);
        let map = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        Ok(Self {
            root: root.to_path_buf(),
            inner: Mutex::new(Inner { map, status, entries }),
            crash,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn task_dir(&self, task: &TaskId) -> PathBuf {
        self.root.join(task.to_string())
    }

    pub fn append(&self, entry: JobMapEntry) -> Result<(), RecordError> {
        entry.check()?;
        let mut line = serde_json::to_vec(&entry).expect("entry serializes");
        line.push(b'\n');
        let path = self.root.join(JOB_MAP_LINES);
        let mut inner = self.inner.lock().unwrap();
        if let Some(c) = &self.crash {
            if c.tick() {
                let _ = inner.map.write_all(&line[..line.len() / 2]);
                let _ = inner.map.sync_data();
                c.crash();
            }
        }
        inner.map.write_all(&line).map_err(io_err(&path))?;
        inner.map.sync_data().map_err(io_err(&path))?;
        inner.entries.push(entry);
        Ok(())
    }

    pub fn update(&self, task: &TaskId, delta: &StatusDelta) -> Result<(), RecordError> {
        let mut inner = self.inner.lock().unwrap();
        let mut next = inner.status.clone();
        next.apply(task, delta)?;
        write_status(&self.root, &next, self.crash.as_deref())?;
        inner.status = next;
        Ok(())
    }

    pub fn set_sources(&self, task: &TaskId, sources: Vec<String>) -> Result<(), RecordError> {
        let mut inner = self.inner.lock().unwrap();
        let mut next = inner.status.clone();
        next.set_sources(task, sources)?;
        write_status(&self.root, &next, None)?;
        inner.status = next;
        Ok(())
    }

    /// Recompute a task's counters from the map: a source counts as succeeded
    /// once it has a successful entry. Sources that only failed so far are not
    /// counted, since resuming retries them.
    pub fn rebase_from_map(&self, task: &TaskId) -> Result<(), RecordError> {
        let mut inner = self.inner.lock().unwrap();
        let ok: HashSet<&str> = inner
            .entries
            .iter()
            .filter(|e| &e.task_id == task && !e.failure)
            .map(|e| e.source_path.as_str())
            .collect();
        let n = ok.len() as u64;
        let mut next = inner.status.clone();
        next.rebase(task, n, 0);
        write_status(&self.root, &next, None)?;
        inner.status = next;
        Ok(())
    }

    pub fn status(&self) -> JobStatus {
        self.inner.lock().unwrap().status.clone()
    }

    pub fn entries(&self) -> Vec<JobMapEntry> {
        self.inner.lock().unwrap().entries.clone()
    }

    pub fn entries_for(&self, task: &TaskId) -> Vec<JobMapEntry> {
        self.inner
            .lock()
            .unwrap()
            .entries
            .iter()
            .filter(|e| &e.task_id == task)
            .cloned()
            .collect()
    }

    /// Writes the consolidated `job_map.json`.
    pub fn finalize(&self) -> Result<(), RecordError> {
        let inner = self.inner.lock().unwrap();
        let text = serde_json::to_vec_pretty(&inner.entries).expect("entries serialize");
        write_atomic(&self.root.join(JOB_MAP_JSON), &text, None)
    }

    pub(crate) fn crash_hook(&self) -> Option<&Arc<CrashHook>> {
        self.crash.as_ref()
    }
}
