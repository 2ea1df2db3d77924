use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::RecordError;
use crate::config::TaskId;
use crate::planner::ExecutionPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Pending,
    Running,
    Completed,
    Skipped,
    Terminated,
}

impl TaskState {
    /// Pending -> Running -> {Completed, Skipped, Terminated}. Two extra
    /// edges: Pending -> Skipped when an upstream task is skipped, and
    /// Terminated -> Running when a job is resumed.
    pub fn can_transition_to(self, next: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (self, next),
            (Pending, Running)
                | (Pending, Skipped)
                | (Running, Completed)
                | (Running, Skipped)
                | (Running, Terminated)
                | (Terminated, Running)
        )
    }

    pub fn is_final(self) -> bool {
        matches!(self, TaskState::Completed | TaskState::Skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskStatus {
    pub state: TaskState,
    pub attempted: u64,
    pub succeeded: u64,
    pub failed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Source pictures fixed when the task first started, so a resumed run
    /// works on the same input set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<String>>,
}

impl TaskStatus {
    fn new() -> Self {
        Self {
            state: TaskState::Pending,
            attempted: 0,
            succeeded: 0,
            failed: 0,
            note: None,
            sources: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobStatus {
    pub job_id: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub plan: ExecutionPlan,
    pub tasks: IndexMap<TaskId, TaskStatus>,
}

/// Counts only grow; a state change is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatusDelta {
    pub state: Option<TaskState>,
    pub succeeded: u64,
    pub failed: u64,
    pub note: Option<String>,
}

impl StatusDelta {
    pub fn state(state: TaskState) -> Self {
        Self {
            state: Some(state),
            ..Default::default()
        }
    }

    pub fn counts(succeeded: u64, failed: u64) -> Self {
        Self {
            succeeded,
            failed,
            ..Default::default()
        }
    }
}

impl JobStatus {
    pub fn new(job_id: String, plan: ExecutionPlan) -> Self {
        let now = Utc::now();
        let tasks = plan.order.iter().map(|t| (t.clone(), TaskStatus::new())).collect();
        Self {
            job_id,
            created_at: now,
            updated_at: now,
            plan,
            tasks,
        }
    }

    pub fn task(&self, id: &TaskId) -> Option<&TaskStatus> {
        self.tasks.get(id)
    }

    pub fn apply(&mut self, task: &TaskId, delta: &StatusDelta) -> Result<(), RecordError> {
        let t = self
            .tasks
            .get_mut(task)
            .ok_or_else(|| RecordError::UnknownTask(task.clone()))?;
        if let Some(next) = delta.state {
            if !t.state.can_transition_to(next) {
                return Err(RecordError::IllegalTransition {
                    task: task.clone(),
                    from: t.state,
                    to: next,
                });
            }
            t.state = next;
        }
        t.succeeded += delta.succeeded;
        t.failed += delta.failed;
        t.attempted = t.succeeded + t.failed;
        if delta.note.is_some() {
            t.note = delta.note.clone();
        }
        self.updated_at = Utc::now();
        Ok(())
    }

    pub(crate) fn set_sources(&mut self, task: &TaskId, sources: Vec<String>) -> Result<(), RecordError> {
        let t = self
            .tasks
            .get_mut(task)
            .ok_or_else(|| RecordError::UnknownTask(task.clone()))?;
        t.sources = Some(sources);
        Ok(())
    }

    /// Replace a task's counts with values recomputed from the job map.
    pub(crate) fn rebase(&mut self, task: &TaskId, succeeded: u64, failed: u64) {
        if let Some(t) = self.tasks.get_mut(task) {
            t.succeeded = succeeded;
            t.failed = failed;
            t.attempted = succeeded + failed;
        }
    }

    pub fn all_final(&self) -> bool {
        self.tasks.values().all(|t| t.state.is_final())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::planner::build_plan;

    fn status() -> JobStatus {
        let cfg = parse_config(r#"{"tasks": {"AA@0": {}, "BB@0": {"pipeline_taskid": "AA@0"}}, "img_folder": "s"}"#)
            .unwrap();
        JobStatus::new("j".into(), build_plan(&cfg).unwrap())
    }

    #[test]
    fn transitions() {
        use TaskState::*;
        let all = [Pending, Running, Completed, Skipped, Terminated];
        let allowed: Vec<_> = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_transition_to(*b))
            .collect();
        assert_eq!(
            allowed,
            [
                (Pending, Running),
                (Pending, Skipped),
                (Running, Completed),
                (Running, Skipped),
                (Running, Terminated),
                (Terminated, Running)
            ]
        );
    }

    #[test]
    fn completed_to_running_is_illegal() {
        let mut s = status();
        let a: TaskId = "AA@0".parse().unwrap();
        s.apply(&a, &StatusDelta::state(TaskState::Running)).unwrap();
        s.apply(&a, &StatusDelta::state(TaskState::Completed)).unwrap();
        let err = s.apply(&a, &StatusDelta::state(TaskState::Running)).unwrap_err();
        assert!(matches!(err, RecordError::IllegalTransition { .. }));
    }

    #[test]
    fn counts_accumulate() {
        let mut s = status();
        let a: TaskId = "AA@0".parse().unwrap();
        s.apply(&a, &StatusDelta::counts(3, 1)).unwrap();
        s.apply(&a, &StatusDelta::counts(2, 0)).unwrap();
        let t = s.task(&a).unwrap();
        assert_eq!((t.attempted, t.succeeded, t.failed), (6, 5, 1));
    }

    #[test]
    fn serde_round_trip() {
        let s = status();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<JobStatus>(&text).unwrap(), s);
    }
}
