//! Runs a job: every task connects its worker, pushes its input set through
//! in batches, and records each produced picture before moving on.

mod batches;
mod estimate;
mod policy;

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use chrono::Utc;
use indexmap::IndexMap;
use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::config::{validate_config, ConfigError, JobConfig, TaskId};
use crate::jpegtools::{digest_bytes, exif_summary, extract_quant_tables, frame_info, file_digest};
use crate::planner::{build_plan, ExecutionPlan, InputSource, PlanError};
use crate::recordkeeping::{
    init_job_root, load_state_for_resume, reconcile_task_dirs, CrashHook, JobMapEntry, RecordError, Recorder,
    StatusDelta, TaskState,
};
use crate::workers::{Credentials, UploadReceipt, Worker, WorkerError, WorkerRegistry, WorkerSession};

pub use batches::make_batches;
pub use estimate::{estimate_manual_overhead, DomainError};
pub use policy::{
    fix_wait, handle_issue, Action, Choice, CriticalIssue, IssueKind, Prompt, StdinPrompt, BACKOFF_BASE,
    BACKOFF_JITTER,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("invalid job config:\n{0}")]
    Invalid(String),
    #[error("no worker registered for platform {0}")]
    UnknownPlatform(String),
    #[error("source folder of {task} is not a directory: {}", .path.display())]
    MissingSource { task: TaskId, path: PathBuf },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("{task}: worker broke its contract: {source}")]
    Worker { task: TaskId, source: WorkerError },
}

pub struct EngineOptions {
    pub clock: Arc<dyn Clock>,
    /// Asked when policy A fires or F runs out of retries. `None` means
    /// non-interactive.
    pub prompt: Option<Arc<Mutex<dyn Prompt>>>,
    /// Run tasks whose inputs are ready concurrently.
    pub parallel_branches: bool,
    /// Per-platform credentials; platforms not listed read `BP_<CODE>_USER`
    /// and `BP_<CODE>_PASS`.
    pub credentials: BTreeMap<String, Credentials>,
    /// Checked between batches; once set, tasks stop and the job stays resumable.
    pub stop: Arc<AtomicBool>,
    #[doc(hidden)]
    pub crash_after: Option<u64>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            clock: Arc::new(SystemClock::new()),
            prompt: None,
            parallel_branches: false,
            credentials: BTreeMap::new(),
            stop: Arc::new(AtomicBool::new(false)),
            crash_after: None,
        }
    }
}

impl fmt::Debug for EngineOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineOptions")
            .field("interactive", &self.prompt.is_some())
            .field("parallel_branches", &self.parallel_branches)
            .field("credentials", &self.credentials)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskResult {
    pub state: TaskState,
    pub attempted: u64,
    pub succeeded: u64,
    pub failed: u64,
    pub note: Option<String>,
}

impl TaskResult {
    pub fn skipped(&self) -> bool {
        self.state == TaskState::Skipped
    }
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job_root: PathBuf,
    pub tasks: IndexMap<TaskId, TaskResult>,
    pub wall_time_s: f64,
    pub terminated_early: bool,
    /// Stopped on request before finishing; resumable.
    pub interrupted: bool,
}

impl JobResult {
    pub fn total_succeeded(&self) -> u64 {
        self.tasks.values().map(|t| t.succeeded).sum()
    }

    pub fn all_completed(&self) -> bool {
        self.tasks.values().all(|t| t.state == TaskState::Completed)
    }
}

enum Outcome {
    Completed,
    Skipped,
    Terminated,
    Stopped,
}

struct JobCtx<'a> {
    cfg: &'a JobConfig,
    plan: &'a ExecutionPlan,
    recorder: &'a Recorder,
    crash: Option<Arc<CrashHook>>,
    terminating: AtomicBool,
}

impl JobCtx<'_> {
    fn crash_site(&self) {
        if let Some(c) = &self.crash {
            if c.tick() {
                c.crash();
            }
        }
    }
}

pub struct Engine<'r> {
    registry: &'r WorkerRegistry,
    opts: EngineOptions,
}

fn is_jpeg_name(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("jpg") || e.eq_ignore_ascii_case("jpeg"))
}

/// JPEG files directly inside `dir`, sorted by name.
pub fn list_source_folder(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        let p = e.path();
        if e.file_type()?.is_file() && is_jpeg_name(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

impl<'r> Engine<'r> {
    pub fn new(registry: &'r WorkerRegistry, opts: EngineOptions) -> Self {
        Self { registry, opts }
    }

    /// Starts a new job under `base_dir`. `config_text` is stored verbatim as
    /// the snapshot; `cfg` should already have its folders resolved.
    pub fn run_job(&self, cfg: &JobConfig, config_text: &str, base_dir: &Path) -> Result<JobResult, EngineError> {
        let report = validate_config(cfg, &self.registry.code_set());
        if report.has_errors() {
            let lines: Vec<String> = report.errors().map(ToString::to_string).collect();
            return Err(EngineError::Invalid(lines.join("\n")));
        }
        let plan = build_plan(cfg)?;
        for (task, src) in &plan.source_of {
            if let InputSource::RootFolder(dir) = src {
                if !dir.is_dir() {
                    return Err(EngineError::MissingSource {
                        task: task.clone(),
                        path: dir.clone(),
                    });
                }
            }
        }
        let root = init_job_root(base_dir, config_text, &plan)?;
        log::info!("job root {}", root.display());
        let status = crate::recordkeeping::load_state(&root)?.status;
        let recorder = Recorder::open(&root, status, Vec::new(), self.crash_hook())?;
        self.execute(cfg, &plan, &recorder)
    }

    /// Continues an interrupted (or terminated) job from its own snapshot.
    pub fn resume_job(&self, job_root: &Path) -> Result<JobResult, EngineError> {
        let state = load_state_for_resume(job_root)?;
        let plan = state.status.plan.clone();
        for t in &plan.order {
            if self.registry.lookup(t.platform_code()).is_none() {
                return Err(EngineError::UnknownPlatform(t.platform_code().to_string()));
            }
        }
        let removed = reconcile_task_dirs(job_root, &plan, &state.entries)?;
        if removed > 0 {
            log::info!("removed {removed} unrecorded file(s) left by the interrupted run");
        }
        let recorder = Recorder::open(job_root, state.status.clone(), state.entries, self.crash_hook())?;
        for (t, st) in &state.status.tasks {
            if !st.state.is_final() {
                recorder.rebase_from_map(t)?;
            }
        }
        self.execute(&state.config, &plan, &recorder)
    }

    fn crash_hook(&self) -> Option<Arc<CrashHook>> {
        self.opts.crash_after.map(|n| Arc::new(CrashHook::after(n)))
    }

    fn execute(&self, cfg: &JobConfig, plan: &ExecutionPlan, recorder: &Recorder) -> Result<JobResult, EngineError> {
        let started = Instant::now();
        let ctx = JobCtx {
            cfg,
            plan,
            recorder,
            crash: recorder.crash_hook().cloned(),
            terminating: AtomicBool::new(false),
        };
        let mut interrupted = false;

        if self.opts.parallel_branches {
            let mut attempted: HashSet<TaskId> = HashSet::new();
            loop {
                let status = recorder.status();
                let wave: Vec<TaskId> = plan
                    .order
                    .iter()
                    .filter(|t| !attempted.contains(*t))
                    .filter(|t| !status.tasks[*t].state.is_final())
                    .filter(|t| {
                        plan.upstream(t)
                            .is_none_or(|u| status.tasks[u].state == TaskState::Completed)
                    })
                    .cloned()
                    .collect();
                if wave.is_empty() {
                    break;
                }
                attempted.extend(wave.iter().cloned());
                let outcomes: Vec<Result<Outcome, EngineError>> = std::thread::scope(|s| {
                    let handles: Vec<_> = wave.iter().map(|t| s.spawn(|| self.run_task(&ctx, t))).collect();
                    handles.into_iter().map(|h| h.join().expect("task thread panicked")).collect()
                });
                let mut stop = false;
                for o in outcomes {
                    match o? {
                        Outcome::Stopped => {
                            interrupted = true;
                            stop = true
                        }
                        Outcome::Terminated => stop = true,
                        Outcome::Completed | Outcome::Skipped => {}
                    }
                }
                if stop {
                    break;
                }
            }
        } else {
            for t in &plan.order {
                match self.run_task(&ctx, t)? {
                    Outcome::Completed | Outcome::Skipped => {}
                    Outcome::Terminated => break,
                    Outcome::Stopped => {
                        interrupted = true;
                        break;
                    }
                }
            }
        }

        recorder.finalize()?;
        let status = recorder.status();
        let tasks = status
            .tasks
            .iter()
            .map(|(t, s)| {
                (
                    t.clone(),
                    TaskResult {
                        state: s.state,
                        attempted: s.attempted,
                        succeeded: s.succeeded,
                        failed: s.failed,
                        note: s.note.clone(),
                    },
                )
            })
            .collect();
        Ok(JobResult {
            job_root: recorder.root().to_path_buf(),
            tasks,
            wall_time_s: started.elapsed().as_secs_f64(),
            terminated_early: ctx.terminating.load(Ordering::SeqCst),
            interrupted,
        })
    }

    fn credentials(&self, code: &str) -> Credentials {
        self.opts
            .credentials
            .get(code)
            .cloned()
            .unwrap_or_else(|| Credentials::from_env(code))
    }

    /// Resolves and freezes the task's input set on first start.
    fn sources(&self, ctx: &JobCtx, task: &TaskId) -> Result<Vec<String>, EngineError> {
        if let Some(s) = ctx.recorder.status().tasks[task].sources.clone() {
            return Ok(s);
        }
        let list: Vec<String> = match &ctx.plan.source_of[task] {
            InputSource::RootFolder(dir) => list_source_folder(dir)
                .map_err(|_| EngineError::MissingSource {
                    task: task.clone(),
                    path: dir.clone(),
                })?
                .into_iter()
                .map(|p| p.to_string_lossy().into_owned())
                .collect(),
            InputSource::UpstreamTask(up) => {
                let set: BTreeSet<String> = ctx
                    .recorder
                    .entries_for(up)
                    .into_iter()
                    .filter(|e| !e.failure)
                    .map(|e| e.produced_path)
                    .collect();
                set.into_iter().collect()
            }
        };
        ctx.recorder.set_sources(task, list.clone())?;
        Ok(list)
    }

    fn set_final(&self, ctx: &JobCtx, task: &TaskId, to: TaskState, note: String) -> Result<(), EngineError> {
        let from = ctx.recorder.status().tasks[task].state;
        if from == TaskState::Terminated && to != TaskState::Running {
            ctx.recorder.update(task, &StatusDelta::state(TaskState::Running))?;
        }
        if from != to {
            ctx.recorder.update(
                task,
                &StatusDelta {
                    state: Some(to),
                    note: Some(note),
                    ..Default::default()
                },
            )?;
        }
        Ok(())
    }

    fn skip_with_descendants(&self, ctx: &JobCtx, task: &TaskId, reason: &str) -> Result<(), EngineError> {
        log::warn!("{task}: skipped: {reason}");
        self.set_final(ctx, task, TaskState::Skipped, reason.to_string())?;
        for d in ctx.plan.descendants(task) {
            if !ctx.recorder.status().tasks[&d].state.is_final() {
                log::warn!("{d}: skipped because upstream {task} was skipped");
                self.set_final(ctx, &d, TaskState::Skipped, format!("upstream {task} skipped"))?;
            }
        }
        Ok(())
    }

    fn terminate(&self, ctx: &JobCtx, task: &TaskId, reason: &str) -> Result<Outcome, EngineError> {
        log::error!("{task}: terminating job: {reason}");
        ctx.terminating.store(true, Ordering::SeqCst);
        if ctx.recorder.status().tasks[task].state == TaskState::Running {
            ctx.recorder.update(
                task,
                &StatusDelta {
                    state: Some(TaskState::Terminated),
                    note: Some(reason.to_string()),
                    ..Default::default()
                },
            )?;
        }
        Ok(Outcome::Terminated)
    }

    fn decide(&self, ctx: &JobCtx, issue: &CriticalIssue, attempt: u32) -> Action {
        let policy = ctx.cfg.effective_policy(&issue.task);
        log::warn!("critical issue: {issue} (attempt {attempt})");
        match &self.opts.prompt {
            Some(p) => {
                let mut guard = p.lock().unwrap();
                handle_issue(issue, policy, attempt, Some(&mut *guard))
            }
            None => handle_issue(issue, policy, attempt, None),
        }
    }

    fn run_task(&self, ctx: &JobCtx, task: &TaskId) -> Result<Outcome, EngineError> {
        let state = ctx.recorder.status().tasks[task].state;
        match state {
            TaskState::Completed => return Ok(Outcome::Completed),
            TaskState::Skipped => return Ok(Outcome::Skipped),
            _ => {}
        }
        if ctx.terminating.load(Ordering::SeqCst) {
            return Ok(Outcome::Terminated);
        }
        if let Some(up) = ctx.plan.upstream(task) {
            let up_state = ctx.recorder.status().tasks[up].state;
            if up_state != TaskState::Completed {
                if up_state == TaskState::Skipped {
                    self.skip_with_descendants(ctx, task, &format!("upstream {up} skipped"))?;
                    return Ok(Outcome::Skipped);
                }
                return Ok(Outcome::Stopped);
            }
        }

        let sources = self.sources(ctx, task)?;
        if state != TaskState::Running {
            ctx.recorder.update(task, &StatusDelta::state(TaskState::Running))?;
        }
        let done: HashSet<String> = ctx
            .recorder
            .entries_for(task)
            .into_iter()
            .filter(|e| !e.failure)
            .map(|e| e.source_path)
            .collect();
        let pending: Vec<String> = sources.into_iter().filter(|s| !done.contains(s)).collect();
        log::info!("{task}: {} picture(s) to process ({} already done)", pending.len(), done.len());

        let code = task.platform_code();
        let mut worker = self
            .registry
            .create(code)
            .ok_or_else(|| EngineError::UnknownPlatform(code.to_string()))?;
        let desc = worker.descriptor().clone();
        let spec = &ctx.cfg.tasks[task];
        let multi = spec.multi_pic && desc.supports_multi_pic;
        if spec.multi_pic && !desc.supports_multi_pic {
            log::warn!("{task}: {code} cannot send several pictures at once; using single-picture mode");
        }
        let mut queue: VecDeque<Vec<String>> =
            make_batches(&pending, multi, spec.pool_size, ctx.cfg.pool_size, desc.default_pool_size).into();

        let mut run = TaskRun {
            engine: self,
            ctx,
            task,
            worker: worker.as_mut(),
            session: None,
            attempt: 0,
        };
        let outcome = run.drive(&mut queue);
        if let Some(s) = run.session.take() {
            run.worker.disconnect(&s);
        }
        match outcome? {
            Step::Done => {
                ctx.recorder.update(task, &StatusDelta::state(TaskState::Completed))?;
                let st = &ctx.recorder.status().tasks[task];
                log::info!("{task}: completed, {} produced, {} failed", st.succeeded, st.failed);
                Ok(Outcome::Completed)
            }
            Step::Skip(reason) => {
                self.skip_with_descendants(ctx, task, &reason)?;
                Ok(Outcome::Skipped)
            }
            Step::Terminate(reason) => self.terminate(ctx, task, &reason),
            Step::Stop => {
                log::warn!("{task}: stopped on request; the job can be resumed");
                Ok(Outcome::Stopped)
            }
        }
    }
}

enum Step {
    Done,
    Skip(String),
    Terminate(String),
    Stop,
}

/// Result of reacting to a critical issue.
enum Reaction {
    Retry,
    Leave(Step),
}

struct TaskRun<'e, 'c, 'w> {
    engine: &'e Engine<'e>,
    ctx: &'c JobCtx<'c>,
    task: &'c TaskId,
    worker: &'w mut dyn Worker,
    session: Option<WorkerSession>,
    /// Consecutive issues without progress.
    attempt: u32,
}

impl TaskRun<'_, '_, '_> {
    fn clock(&self) -> &dyn Clock {
        self.engine.opts.clock.as_ref()
    }

    fn stopping(&self) -> bool {
        self.engine.opts.stop.load(Ordering::SeqCst) || self.ctx.terminating.load(Ordering::SeqCst)
    }

    fn react(&mut self, err: &WorkerError) -> Result<Reaction, EngineError> {
        let Some(issue) = CriticalIssue::from_worker_error(self.task, err) else {
            return Err(EngineError::Worker {
                task: self.task.clone(),
                source: WorkerError::ContractViolation(err.to_string()),
            });
        };
        match self.engine.decide(self.ctx, &issue, self.attempt) {
            Action::SkipTask => Ok(Reaction::Leave(Step::Skip(issue.to_string()))),
            Action::Terminate { reason } => Ok(Reaction::Leave(Step::Terminate(reason))),
            Action::AutoFix { wait } => {
                self.attempt += 1;
                if !wait.is_zero() {
                    log::info!("{}: waiting {} s before retrying", self.task, wait.as_secs_f64());
                    self.clock().sleep(wait);
                }
                if matches!(issue.kind, IssueKind::NetworkFailure | IssueKind::AuthFailure) {
                    if let Some(s) = self.session.take() {
                        self.worker.disconnect(&s);
                    }
                }
                Ok(Reaction::Retry)
            }
        }
    }

    fn ensure_session(&mut self) -> Result<Option<Step>, EngineError> {
        while self.session.is_none() {
            if self.stopping() {
                return Ok(Some(Step::Stop));
            }
            let creds = self.engine.credentials(self.task.platform_code());
            match self.worker.connect(&creds) {
                Ok(s) => self.session = Some(s),
                Err(e) => {
                    if let Reaction::Leave(step) = self.react(&e)? {
                        return Ok(Some(step));
                    }
                }
            }
        }
        Ok(None)
    }

    fn drive(&mut self, queue: &mut VecDeque<Vec<String>>) -> Result<Step, EngineError> {
        while let Some(batch) = queue.pop_front() {
            if self.stopping() {
                return Ok(Step::Stop);
            }
            if let Some(step) = self.ensure_session()? {
                return Ok(step);
            }
            let mut ok = 0u64;
            let mut failed = 0u64;

            // digest sources first; unreadable ones fail without an upload
            let mut items: Vec<(String, PathBuf, String)> = Vec::with_capacity(batch.len());
            for src in batch {
                let path = self.resolve(&src);
                match file_digest(&path) {
                    Ok(d) => items.push((src, path, d)),
                    Err(e) => {
                        self.fail(&src, None, format!("source unreadable: {e}"))?;
                        failed += 1;
                    }
                }
            }
            if items.is_empty() {
                self.count(0, failed)?;
                continue;
            }

            let paths: Vec<PathBuf> = items.iter().map(|i| i.1.clone()).collect();
            let session = self.session.clone().expect("connected");
            let (receipts, err) = match self.worker.upload_proc(&session, &paths) {
                Ok(r) => (r, None),
                Err(WorkerError::PartialUpload { receipts, cause }) => (receipts, Some(*cause)),
                Err(e) => (Vec::new(), Some(e)),
            };
            if receipts.len() > items.len() {
                return Err(EngineError::Worker {
                    task: self.task.clone(),
                    source: WorkerError::ContractViolation("more receipts than pictures".into()),
                });
            }
            let n = receipts.len();
            let mut requeue: Vec<String> = Vec::new();
            let mut pending_err: Option<WorkerError> = None;

            if n > 0 {
                match self.worker.download_proc(&session, &receipts, &self.task_dir()) {
                    Ok(files) => {
                        for ((r, file), item) in receipts.iter().zip(&files).zip(&items) {
                            self.ctx.crash_site();
                            if self.record(item, r, file)? {
                                ok += 1;
                            } else {
                                failed += 1;
                            }
                            self.ctx.crash_site();
                        }
                    }
                    Err(e) => {
                        // uploaded copies are lost to us; send the pictures again
                        requeue.extend(items[..n].iter().map(|i| i.0.clone()));
                        pending_err = Some(e);
                    }
                }
            }
            match err {
                None => {}
                Some(WorkerError::Rejected { path, reason }) => {
                    let idx = items[n..].iter().position(|i| i.1 == path).map(|i| i + n);
                    match idx {
                        Some(i) => {
                            self.fail(&items[i].0, Some(items[i].2.clone()), format!("rejected: {reason}"))?;
                            failed += 1;
                            requeue.extend(items[i + 1..].iter().map(|x| x.0.clone()));
                        }
                        None => requeue.extend(items[n..].iter().map(|x| x.0.clone())),
                    }
                }
                Some(e) => {
                    requeue.extend(items[n..].iter().map(|x| x.0.clone()));
                    pending_err.get_or_insert(e);
                }
            }
            self.count(ok, failed)?;
            if ok + failed > 0 {
                self.attempt = 0;
            }
            if !requeue.is_empty() {
                // keep the original batch shape for the retry
                queue.push_front(requeue);
            }
            if let Some(e) = pending_err {
                if let Reaction::Leave(step) = self.react(&e)? {
                    return Ok(step);
                }
            }
        }
        Ok(Step::Done)
    }

    fn count(&self, ok: u64, failed: u64) -> Result<(), EngineError> {
        self.ctx.recorder.update(self.task, &StatusDelta::counts(ok, failed))?;
        Ok(())
    }

    fn task_dir(&self) -> PathBuf {
        self.ctx.recorder.task_dir(self.task)
    }

    fn resolve(&self, src: &str) -> PathBuf {
        let p = Path::new(src);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.ctx.recorder.root().join(p)
        }
    }

    fn fail(&self, src: &str, digest: Option<String>, reason: String) -> Result<(), EngineError> {
        log::warn!("{}: {src}: {reason}", self.task);
        self.ctx
            .recorder
            .append(JobMapEntry::failed(self.task.clone(), src.to_string(), digest, reason))?;
        Ok(())
    }

    /// Inspects a downloaded picture and appends its map entry. A download
    /// that is not a readable JPEG is removed and recorded as failed.
    fn record(&self, item: &(String, PathBuf, String), receipt: &UploadReceipt, file: &Path) -> Result<bool, EngineError> {
        let (src, _, src_digest) = item;
        let bytes = match fs::read(file) {
            Ok(b) => b,
            Err(e) => {
                self.fail(src, Some(src_digest.clone()), format!("downloaded file unreadable: {e}"))?;
                return Ok(false);
            }
        };
        let inspected = extract_quant_tables(&bytes).and_then(|q| Ok((q, frame_info(&bytes)?)));
        let (tables, frame) = match inspected {
            Ok(x) => x,
            Err(e) => {
                let _ = fs::remove_file(file);
                self.fail(src, Some(src_digest.clone()), format!("platform returned an unusable picture: {e}"))?;
                return Ok(false);
            }
        };
        let name = file.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let entry = JobMapEntry {
            task_id: self.task.clone(),
            produced_path: format!("{}/{name}", self.task),
            source_path: src.clone(),
            source_sha256: Some(src_digest.clone()),
            media_id: Some(receipt.media_id.clone()),
            failure: false,
            failure_reason: None,
            exif: exif_summary(&bytes).unwrap_or_default(),
            sha256: Some(digest_bytes(&bytes)),
            quant_tables: Some(tables),
            width_px: Some(frame.width),
            height_px: Some(frame.height),
            byte_size: Some(bytes.len() as u64),
            mime: Some("image/jpeg".into()),
            uploaded_at: Some(receipt.uploaded_at),
            downloaded_at: Some(Utc::now()),
        };
        self.ctx.recorder.append(entry)?;
        Ok(true)
    }
}

