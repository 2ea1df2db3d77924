//! Job configuration: the JSON document naming the source dataset, the tasks
//! (one per platform visit), pipelines between tasks, pool sizes and the
//! critical-issue policy.
//!
//! ```json
//! { "tasks": { "MASTD@0": { "multi_pic": false }, "REDDT@0": { "pipeline_taskid": "MASTD@0" } },
//!   "img_folder": "dataset", "pool_size": null,
//!   "critical_issues_handling": { "default_action": "F" } }
//! ```
//!
//! Parsing is strict: unknown keys are rejected so typos surface before a
//! long job starts.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const DEFAULT_MAX_FIX_RETRIES: u32 = 5;
/// Half an hour, the order of the rate-limit pauses observed on real platforms.
pub const DEFAULT_FALLBACK_WAIT_S: u64 = 1800;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid task id {text:?}: {reason}")]
pub struct TaskIdError {
    pub text: String,
    pub reason: &'static str,
}

/// Task identifier of the form `<PLATFORM_CODE>@<ordinal>`, e.g. `MASTD@0`.
///
/// Ordering is by platform code, then ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskId {
    platform_code: String,
    ordinal: u32,
}

impl TaskId {
    pub fn new(platform_code: &str, ordinal: u32) -> Result<Self, TaskIdError> {
        validate_platform_code(platform_code).map_err(|reason| TaskIdError {
            text: format!("{platform_code}@{ordinal}"),
            reason,
        })?;
        Ok(Self {
            platform_code: platform_code.to_string(),
            ordinal,
        })
    }

    pub fn platform_code(&self) -> &str {
        &self.platform_code
    }

    pub fn ordinal(&self) -> u32 {
        self.ordinal
    }
}

pub fn validate_platform_code(code: &str) -> Result<(), &'static str> {
    if !(2..=8).contains(&code.len()) {
        return Err("platform code must be 2 to 8 characters");
    }
    if !code
        .bytes()
        .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
    {
        return Err("platform code must be uppercase alphanumeric");
    }
    Ok(())
}

impl FromStr for TaskId {
    type Err = TaskIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| TaskIdError {
            text: s.to_string(),
            reason,
        };
        let (code, ord) = s.split_once('@').ok_or_else(|| err("missing '@'"))?;
        validate_platform_code(code).map_err(err)?;
        if ord.is_empty() || !ord.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("ordinal must be a non-negative integer"));
        }
        if ord.len() > 1 && ord.starts_with('0') {
            return Err(err("ordinal has leading zeros"));
        }
        let ordinal = ord.parse().map_err(|_| err("ordinal out of range"))?;
        Ok(Self {
            platform_code: code.to_string(),
            ordinal,
        })
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.platform_code, self.ordinal)
    }
}

impl Serialize for TaskId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TaskId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// What to do when a critical issue (rate limit, network failure, ...) hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultAction {
    Ask,
    SkipTask,
    AutoFix,
    Terminate,
}

impl DefaultAction {
    pub fn letter(self) -> char {
        match self {
            Self::Ask => 'A',
            Self::SkipTask => 'S',
            Self::AutoFix => 'F',
            Self::Terminate => 'T',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "A" => Some(Self::Ask),
            "S" => Some(Self::SkipTask),
            "F" => Some(Self::AutoFix),
            "T" => Some(Self::Terminate),
            _ => None,
        }
    }
}

impl Serialize for DefaultAction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.letter())
    }
}

impl<'de> Deserialize<'de> for DefaultAction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_letter(&s).ok_or_else(|| {
            de::Error::custom(format!(
                "unknown default_action {s:?} (expected one of \"A\", \"S\", \"F\", \"T\")"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuePolicy {
    pub default_action: DefaultAction,
    #[serde(default = "default_max_fix_retries")]
    pub max_fix_retries: u32,
    #[serde(default = "default_fallback_wait_s")]
    pub fallback_wait_s: u64,
}

fn default_max_fix_retries() -> u32 {
    DEFAULT_MAX_FIX_RETRIES
}

fn default_fallback_wait_s() -> u64 {
    DEFAULT_FALLBACK_WAIT_S
}

impl IssuePolicy {
    pub fn new(default_action: DefaultAction) -> Self {
        Self {
            default_action,
            max_fix_retries: DEFAULT_MAX_FIX_RETRIES,
            fallback_wait_s: DEFAULT_FALLBACK_WAIT_S,
        }
    }
}

impl Default for IssuePolicy {
    fn default() -> Self {
        Self::new(DefaultAction::AutoFix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub id: TaskId,
    pub img_folder: Option<PathBuf>,
    pub pipeline_taskid: Option<TaskId>,
    pub pool_size: Option<u32>,
    pub multi_pic: bool,
    pub issue_policy: Option<IssuePolicy>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobConfig {
    pub tasks: IndexMap<TaskId, TaskSpec>,
    pub img_folder: PathBuf,
    pub pool_size: Option<u32>,
    pub debug: bool,
    pub issue_policy: IssuePolicy,
}

impl JobConfig {
    pub fn effective_policy(&self, task: &TaskId) -> &IssuePolicy {
        self.tasks
            .get(task)
            .and_then(|t| t.issue_policy.as_ref())
            .unwrap_or(&self.issue_policy)
    }

    /// Source directory of a task not fed by a pipeline.
    pub fn effective_img_folder(&self, task: &TaskSpec) -> PathBuf {
        task.img_folder
            .clone()
            .unwrap_or_else(|| self.img_folder.clone())
    }

    /// Copy with every relative `img_folder` anchored at `base`.
    pub fn resolve_paths(&self, base: &Path) -> JobConfig {
        let anchor = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mut out = self.clone();
        out.img_folder = anchor(&self.img_folder);
        for t in out.tasks.values_mut() {
            if let Some(f) = &t.img_folder {
                t.img_folder = Some(anchor(f));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("config serializes")
    }

    fn to_raw(&self) -> RawConfig {
        RawConfig {
            tasks: RawTasks(
                self.tasks
                    .values()
                    .map(|t| {
                        (
                            t.id.to_string(),
                            RawTask {
                                img_folder: t.img_folder.clone(),
                                pipeline_taskid: t.pipeline_taskid.as_ref().map(ToString::to_string),
                                pool_size: t.pool_size.map(i64::from),
                                multi_pic: Some(t.multi_pic),
                                critical_issues_handling: t.issue_policy.clone(),
                            },
                        )
                    })
                    .collect(),
            ),
            img_folder: self.img_folder.clone(),
            pool_size: self.pool_size.map(i64::from),
            debug: Some(self.debug),
            critical_issues_handling: Some(self.issue_policy.clone()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    tasks: RawTasks,
    img_folder: PathBuf,
    #[serde(default)]
    pool_size: Option<i64>,
    #[serde(default)]
    debug: Option<bool>,
    #[serde(default)]
    critical_issues_handling: Option<IssuePolicy>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    #[serde(default)]
    img_folder: Option<PathBuf>,
    #[serde(default)]
    pipeline_taskid: Option<String>,
    #[serde(default)]
    pool_size: Option<i64>,
    #[serde(default)]
    multi_pic: Option<bool>,
    #[serde(default)]
    critical_issues_handling: Option<IssuePolicy>,
}

/// Task map preserving document order and rejecting duplicate keys.
#[derive(Debug)]
struct RawTasks(Vec<(String, RawTask)>);

impl Serialize for RawTasks {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for RawTasks {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawTasks;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of task id to task object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawTasks, A::Error> {
                let mut out: Vec<(String, RawTask)> = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, RawTask>()? {
                    if out.iter().any(|(seen, _)| *seen == k) {
                        return Err(de::Error::custom(format!("duplicate task id {k:?}")));
                    }
                    out.push((k, v));
                }
                Ok(RawTasks(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn pool_size(v: Option<i64>, what: &str) -> Result<Option<u32>, ConfigError> {
    match v {
        None => Ok(None),
        Some(n) if n >= 1 && n <= u32::MAX as i64 => Ok(Some(n as u32)),
        Some(n) => Err(ConfigError::Schema(format!(
            "{what}: pool_size must be >= 1, got {n}"
        ))),
    }
}

pub fn parse_config(text: &str) -> Result<JobConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
            ConfigError::Syntax(e.to_string())
        }
        _ => ConfigError::Schema(e.to_string()),
    })?;

    if raw.tasks.0.is_empty() {
        return Err(ConfigError::Schema("\"tasks\" must contain at least one task".into()));
    }

    let mut tasks = IndexMap::with_capacity(raw.tasks.0.len());
    for (key, t) in raw.tasks.0 {
        let id: TaskId = key
            .parse()
            .map_err(|e: TaskIdError| ConfigError::Schema(e.to_string()))?;
        let pipeline_taskid = t
            .pipeline_taskid
            .map(|p| p.parse::<TaskId>())
            .transpose()
            .map_err(|e| ConfigError::Schema(format!("task {id}: pipeline_taskid: {e}")))?;
        if let Some(p) = &t.critical_issues_handling {
            check_policy(p, &format!("task {id}"))?;
        }
        let spec = TaskSpec {
            pool_size: pool_size(t.pool_size, &format!("task {id}"))?,
            img_folder: t.img_folder,
            pipeline_taskid,
            multi_pic: t.multi_pic.unwrap_or(false),
            issue_policy: t.critical_issues_handling,
            id: id.clone(),
        };
        tasks.insert(id, spec);
    }

    let issue_policy = raw.critical_issues_handling.unwrap_or_default();
    check_policy(&issue_policy, "root")?;

    Ok(JobConfig {
        tasks,
        img_folder: raw.img_folder,
        pool_size: pool_size(raw.pool_size, "root")?,
        debug: raw.debug.unwrap_or(false),
        issue_policy,
    })
}

fn check_policy(p: &IssuePolicy, what: &str) -> Result<(), ConfigError> {
    if p.max_fix_retries == 0 {
        return Err(ConfigError::Schema(format!(
            "{what}: max_fix_retries must be >= 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub task: Option<TaskId>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match &self.task {
            Some(t) => write!(f, "{sev}: {t}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }
}

/// Semantic checks that need the set of known platform codes.
pub fn validate_config(cfg: &JobConfig, platforms: &BTreeSet<String>) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |severity, task: &TaskId, message: String| {
        findings.push(Finding {
            severity,
            task: Some(task.clone()),
            message,
        })
    };
    for t in cfg.tasks.values() {
        if !platforms.contains(t.id.platform_code()) {
            push(
                Severity::Error,
                &t.id,
                format!("unknown platform {:?}", t.id.platform_code()),
            );
        }
        if t.img_folder.is_some() && t.pipeline_taskid.is_some() {
            push(
                Severity::Error,
                &t.id,
                "both img_folder and pipeline_taskid are set".into(),
            );
        }
        if let Some(up) = &t.pipeline_taskid {
            if !cfg.tasks.contains_key(up) {
                push(
                    Severity::Error,
                    &t.id,
                    format!("dangling pipeline reference to {up}"),
                );
            }
        }
        if t.multi_pic && t.pool_size.is_none() && cfg.pool_size.is_none() {
            push(
                Severity::Warning,
                &t.id,
                "multi_pic without pool_size; the worker's default pool size applies".into(),
            );
        }
    }
    ValidationReport { findings }
}
