use std::fmt::Write;

use bpipe_core::config::TaskId;
use bpipe_core::engine::JobResult;
use bpipe_core::recordkeeping::{JobMapEntry, JobStatus, TaskState};

fn state_name(s: TaskState) -> &'static str {
    match s {
        TaskState::Pending => "pending",
        TaskState::Running => "running",
        TaskState::Completed => "completed",
        TaskState::Skipped => "skipped",
        TaskState::Terminated => "terminated",
    }
}

pub fn counts_table(r: &JobResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:<11} {:>9} {:>9} {:>7}", "task", "state", "attempted", "produced", "failed");
    for (id, t) in &r.tasks {
        let _ = writeln!(
            out,
            "{:<12} {:<11} {:>9} {:>9} {:>7}",
            id.to_string(),
            state_name(t.state),
            t.attempted,
            t.succeeded,
            t.failed
        );
        if let Some(n) = &t.note {
            let _ = writeln!(out, "             note: {n}");
        }
    }
    let failed: u64 = r.tasks.values().map(|t| t.failed).sum();
    let _ = writeln!(
        out,
        "total: {} produced, {failed} failed in {:.1} s",
        r.total_succeeded(),
        r.wall_time_s
    );
    out
}

fn entry_row(e: &JobMapEntry) -> String {
    if e.failure {
        return format!(
            "  FAILED  {}  {}",
            e.source_path,
            e.failure_reason.as_deref().unwrap_or("")
        );
    }
    let digest = e.sha256.as_deref().map(|d| &d[..d.len().min(12)]).unwrap_or("-");
    let dims = match (e.width_px, e.height_px) {
        (Some(w), Some(h)) => format!("{w}x{h}"),
        _ => "-".into(),
    };
    let dqt0 = e
        .quant_tables
        .as_ref()
        .and_then(|q| q.iter().find(|t| t.table_id == 0))
        .map(|t| {
            t.values[..8]
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_else(|| "-".into());
    format!(
        "  {:<52} {:<12} {:>9}  exif:{:<3}  dqt0[..8]: {}",
        e.produced_path,
        digest,
        dims,
        if e.exif.present { "yes" } else { "no" },
        dqt0
    )
}

pub fn inspect_table(status: &JobStatus, entries: &[&JobMapEntry], only: Option<&TaskId>) -> String {
    let mut out = String::new();
    for (id, t) in &status.tasks {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let _ = writeln!(
            out,
            "== {id}  {}  {} produced, {} failed ==",
            state_name(t.state),
            t.succeeded,
            t.failed
        );
        for e in entries.iter().filter(|e| &e.task_id == id) {
            let _ = writeln!(out, "{}", entry_row(e));
        }
    }
    out
}
