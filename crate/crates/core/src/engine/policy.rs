use std::fmt;
use std::io::{BufRead, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::{DefaultAction, IssuePolicy, TaskId};
use crate::workers::WorkerError;

/// First network/auth retry waits this long; each further retry doubles it.
pub const BACKOFF_BASE: Duration = Duration::from_secs(2);
/// Backoff jitter, as a fraction of the nominal wait.
pub const BACKOFF_JITTER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueKind {
    RateLimit,
    NetworkFailure,
    AuthFailure,
    NotFound,
}

/// A platform-level problem that stops a task until someone decides what to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalIssue {
    pub kind: IssueKind,
    pub task: TaskId,
    pub retry_after_s: Option<u64>,
    pub detail: String,
}

impl CriticalIssue {
    /// `None` for errors that concern a single picture or a bug.
    pub fn from_worker_error(task: &TaskId, e: &WorkerError) -> Option<Self> {
        let (kind, retry_after_s) = match e {
            WorkerError::RateLimited { retry_after_s } => (IssueKind::RateLimit, *retry_after_s),
            WorkerError::Network(_) => (IssueKind::NetworkFailure, None),
            WorkerError::Auth(_) => (IssueKind::AuthFailure, None),
            WorkerError::NotFound(_) => (IssueKind::NotFound, None),
            WorkerError::PartialUpload { cause, .. } => return Self::from_worker_error(task, cause),
            WorkerError::Rejected { .. } | WorkerError::ContractViolation(_) | WorkerError::Io { .. } => {
                return None
            }
        };
        Some(Self {
            kind,
            task: task.clone(),
            retry_after_s,
            detail: e.to_string(),
        })
    }
}

impl fmt::Display for CriticalIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.task, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    SkipTask,
    /// Wait, then retry what failed.
    AutoFix { wait: Duration },
    Terminate { reason: String },
}

/// Answer to an interactive question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Skip,
    Fix,
    Terminate,
}

pub trait Prompt: Send {
    fn ask(&mut self, issue: &CriticalIssue, attempt: u32) -> Choice;
}

/// Asks on stderr, reads one letter per line from stdin. End of input
/// terminates.
#[derive(Debug, Default)]
pub struct StdinPrompt;

impl Prompt for StdinPrompt {
    fn ask(&mut self, issue: &CriticalIssue, attempt: u32) -> Choice {
        let stdin = std::io::stdin();
        let mut line = String::new();
        loop {
            eprint!(
                "critical issue on {} after {attempt} fix attempt(s): {}\n[S]kip task, [F]ix (retry), [T]erminate? ",
                issue.task, issue.detail
            );
            let _ = std::io::stderr().flush();
            line.clear();
            match stdin.lock().read_line(&mut line) {
                Ok(0) | Err(_) => return Choice::Terminate,
                Ok(_) => {}
            }
            match line.trim().to_ascii_uppercase().as_str() {
                "S" => return Choice::Skip,
                "F" => return Choice::Fix,
                "T" => return Choice::Terminate,
                _ => eprintln!("please answer S, F or T"),
            }
        }
    }
}

/// The wait AutoFix applies for the `attempt`-th consecutive issue
/// (0-based). `jitter` in [0, 1) scales the random part of network backoff.
pub fn fix_wait(issue: &CriticalIssue, policy: &IssuePolicy, attempt: u32, jitter: f64) -> Duration {
    match issue.kind {
        IssueKind::RateLimit => Duration::from_secs(issue.retry_after_s.unwrap_or(policy.fallback_wait_s)),
        IssueKind::NetworkFailure | IssueKind::AuthFailure => {
            let nominal = BACKOFF_BASE.saturating_mul(2u32.saturating_pow(attempt.min(20)));
            nominal.mul_f64(1.0 + BACKOFF_JITTER * jitter.clamp(0.0, 1.0))
        }
        IssueKind::NotFound => Duration::ZERO,
    }
}

fn ask(prompt: &mut dyn Prompt, issue: &CriticalIssue, policy: &IssuePolicy, attempt: u32) -> Action {
    match prompt.ask(issue, attempt) {
        Choice::Skip => Action::SkipTask,
        Choice::Fix => Action::AutoFix {
            wait: fix_wait(issue, policy, attempt, rand::random()),
        },
        Choice::Terminate => Action::Terminate {
            reason: format!("terminated by user after {issue}"),
        },
    }
}

/// Decides how to react to `issue`, given that `attempt` fixes were already
/// tried in a row. `prompt` is `None` when running non-interactively.
pub fn handle_issue(
    issue: &CriticalIssue,
    policy: &IssuePolicy,
    attempt: u32,
    prompt: Option<&mut dyn Prompt>,
) -> Action {
    match policy.default_action {
        DefaultAction::SkipTask => Action::SkipTask,
        DefaultAction::Terminate => Action::Terminate {
            reason: format!("policy T: {issue}"),
        },
        DefaultAction::Ask => match prompt {
            Some(p) => ask(p, issue, policy, attempt),
            None => Action::Terminate {
                reason: format!(
                    "policy A needs an answer but the run is non-interactive: {issue}; \
                     use S, F or T in critical_issues_handling for unattended runs"
                ),
            },
        },
        DefaultAction::AutoFix if attempt < policy.max_fix_retries => Action::AutoFix {
            wait: fix_wait(issue, policy, attempt, rand::random()),
        },
        DefaultAction::AutoFix => match prompt {
            Some(p) => ask(p, issue, policy, attempt),
            None => Action::Terminate {
                reason: format!("automatic fix gave up after {attempt} attempts: {issue}"),
            },
        },
    }
}
