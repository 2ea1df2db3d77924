//! Builds the task graph of a job.
//!
//! Every task consumes exactly one input set: either a source folder or the
//! downloaded output of one upstream task. Edges therefore form a forest of
//! chains and trees. Execution order is Kahn's algorithm with the smallest
//! ready [`TaskId`] picked first, so equal configs always yield equal plans.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{JobConfig, TaskId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    RootFolder(PathBuf),
    UpstreamTask(TaskId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    /// Tasks in configuration order.
    pub nodes: Vec<TaskId>,
    pub edges: Vec<(TaskId, TaskId)>,
    pub order: Vec<TaskId>,
    pub source_of: BTreeMap<TaskId, InputSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("pipeline cycle: {}", fmt_cycle(.0))]
    Cycle(Vec<TaskId>),
    #[error("task {task} pipelines from unknown task {missing}")]
    DanglingReference { task: TaskId, missing: TaskId },
    #[error("task {0} sets both img_folder and pipeline_taskid")]
    ConflictingSources(TaskId),
}

fn fmt_cycle(c: &[TaskId]) -> String {
    let mut s: Vec<String> = c.iter().map(ToString::to_string).collect();
    if let Some(first) = c.first() {
        s.push(first.to_string());
    }
    s.join(" -> ")
}

impl ExecutionPlan {
    pub fn upstream(&self, task: &TaskId) -> Option<&TaskId> {
        match self.source_of.get(task)? {
            InputSource::UpstreamTask(u) => Some(u),
            InputSource::RootFolder(_) => None,
        }
    }

    pub fn downstream(&self, task: &TaskId) -> impl Iterator<Item = &TaskId> + '_ {
        let task = task.clone();
        self.edges
            .iter()
            .filter(move |(u, _)| *u == task)
            .map(|(_, v)| v)
    }

    /// All transitive downstream tasks, in plan order.
    pub fn descendants(&self, task: &TaskId) -> Vec<TaskId> {
        let mut found = BTreeSet::new();
        let mut stack = vec![task.clone()];
        while let Some(t) = stack.pop() {
            for d in self.downstream(&t) {
                if found.insert(d.clone()) {
                    stack.push(d.clone());
                }
            }
        }
        self.order
            .iter()
            .filter(|t| found.contains(*t))
            .cloned()
            .collect()
    }
}

pub fn build_plan(cfg: &JobConfig) -> Result<ExecutionPlan, PlanError> {
    let nodes: Vec<TaskId> = cfg.tasks.keys().cloned().collect();
    let mut edges = Vec::new();
    let mut source_of = BTreeMap::new();

    for t in cfg.tasks.values() {
        match &t.pipeline_taskid {
            Some(up) => {
                if t.img_folder.is_some() {
                    return Err(PlanError::ConflictingSources(t.id.clone()));
                }
                if !cfg.tasks.contains_key(up) {
                    return Err(PlanError::DanglingReference {
                        task: t.id.clone(),
                        missing: up.clone(),
                    });
                }
                edges.push((up.clone(), t.id.clone()));
                source_of.insert(t.id.clone(), InputSource::UpstreamTask(up.clone()));
            }
            None => {
                source_of.insert(
                    t.id.clone(),
                    InputSource::RootFolder(cfg.effective_img_folder(t)),
                );
            }
        }
    }

    let order = topo_order(&nodes, &edges).map_err(|remaining| {
        PlanError::Cycle(find_cycle(&remaining, &source_of))
    })?;

    Ok(ExecutionPlan {
        nodes,
        edges,
        order,
        source_of,
    })
}

/// Kahn's algorithm; on failure returns the nodes that never became ready.
fn topo_order(nodes: &[TaskId], edges: &[(TaskId, TaskId)]) -> Result<Vec<TaskId>, Vec<TaskId>> {
    let mut indegree: HashMap<&TaskId, usize> = nodes.iter().map(|n| (n, 0)).collect();
    let mut out: HashMap<&TaskId, Vec<&TaskId>> = HashMap::new();
    for (u, v) in edges {
        *indegree.get_mut(v).expect("edge endpoint is a node") += 1;
        out.entry(u).or_default().push(v);
    }
    let mut ready: BTreeSet<&TaskId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| *n)
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(n) = ready.pop_first() {
        order.push(n.clone());
        for v in out.get(n).into_iter().flatten() {
            let d = indegree.get_mut(v).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(v);
            }
        }
    }
    if order.len() == nodes.len() {
        Ok(order)
    } else {
        let done: BTreeSet<&TaskId> = order.iter().collect();
        Err(nodes.iter().filter(|n| !done.contains(n)).cloned().collect())
    }
}

/// Walk upstream links from a stuck node until one repeats.
fn find_cycle(stuck: &[TaskId], source_of: &BTreeMap<TaskId, InputSource>) -> Vec<TaskId> {
    let Some(start) = stuck.iter().min() else {
        return Vec::new();
    };
    let mut path: Vec<TaskId> = Vec::new();
    let mut cur = start.clone();
    loop {
        if let Some(pos) = path.iter().position(|t| *t == cur) {
            let mut cycle = path.split_off(pos);
            // present the cycle in pipeline direction, starting from its smallest id
            cycle.reverse();
            let min = cycle.iter().enumerate().min_by_key(|(_, t)| *t).map(|(i, _)| i).unwrap();
            cycle.rotate_left(min);
            return cycle;
        }
        path.push(cur.clone());
        match source_of.get(&cur) {
            Some(InputSource::UpstreamTask(up)) => cur = up.clone(),
            _ => return path,
        }
    }
}

/// Tasks not yet completed whose upstream (if any) is completed, in plan order.
pub fn ready_tasks(plan: &ExecutionPlan, completed: &BTreeSet<TaskId>) -> Vec<TaskId> {
    plan.order
        .iter()
        .filter(|t| !completed.contains(*t))
        .filter(|t| plan.upstream(t).is_none_or(|u| completed.contains(u)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn id(s: &str) -> TaskId {
        s.parse().unwrap()
    }

    fn ids(v: &[TaskId]) -> Vec<String> {
        v.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn one_pipeline_plus_independent_tasks() {
        let cfg = parse_config(
            r#"{"tasks": {
                "MASTD@0": {}, "TWITR@0": {"pipeline_taskid": "MASTD@0"},
                "TELEG@0": {}, "WHATS@0": {}
            }, "img_folder": "src"}"#,
        )
        .unwrap();
        let plan = build_plan(&cfg).unwrap();
        assert_eq!(plan.nodes.len(), 4);
        assert_eq!(plan.edges, vec![(id("MASTD@0"), id("TWITR@0"))]);
        for t in ["TELEG@0", "WHATS@0", "MASTD@0"] {
            assert_eq!(plan.source_of[&id(t)], InputSource::RootFolder("src".into()));
        }
        assert_eq!(
            plan.source_of[&id("TWITR@0")],
            InputSource::UpstreamTask(id("MASTD@0"))
        );
        assert_eq!(ids(&plan.order), ["MASTD@0", "TELEG@0", "TWITR@0", "WHATS@0"]);
    }

    #[test]
    fn self_loop_is_cycle() {
        let cfg = parse_config(r#"{"tasks": {"A1@0": {"pipeline_taskid": "A1@0"}}, "img_folder": "s"}"#)
            .unwrap();
        assert_eq!(build_plan(&cfg), Err(PlanError::Cycle(vec![id("A1@0")])));
    }

    #[test]
    fn cycle_message_names_members() {
        let cfg = parse_config(
            r#"{"tasks": {"AA@0": {"pipeline_taskid": "CC@0"}, "BB@0": {"pipeline_taskid": "AA@0"},
                "CC@0": {"pipeline_taskid": "BB@0"}, "DD@0": {}}, "img_folder": "s"}"#,
        )
        .unwrap();
        let err = build_plan(&cfg).unwrap_err();
        assert_eq!(err.to_string(), "pipeline cycle: AA@0 -> BB@0 -> CC@0 -> AA@0");
    }

    #[test]
    fn four_platform_chain() {
        let cfg = parse_config(
            r#"{"tasks": {
                "ZZ@0": {"pipeline_taskid": "YY@0"}, "YY@0": {"pipeline_taskid": "XX@0"},
                "XX@0": {"pipeline_taskid": "WW@9"}, "WW@9": {}
            }, "img_folder": "s"}"#,
        )
        .unwrap();
        let plan = build_plan(&cfg).unwrap();
        assert_eq!(plan.edges.len(), 3);
        assert_eq!(ids(&plan.order), ["WW@9", "XX@0", "YY@0", "ZZ@0"]);
        assert_eq!(ids(&plan.descendants(&id("XX@0"))), ["YY@0", "ZZ@0"]);
    }

    #[test]
    fn dangling_and_conflicting() {
        let cfg = parse_config(r#"{"tasks": {"AB@0": {"pipeline_taskid": "CD@0"}}, "img_folder": "s"}"#)
            .unwrap();
        assert!(matches!(build_plan(&cfg), Err(PlanError::DanglingReference { .. })));
        let cfg = parse_config(
            r#"{"tasks": {"AB@0": {"pipeline_taskid": "CD@0", "img_folder": "x"}, "CD@0": {}}, "img_folder": "s"}"#,
        )
        .unwrap();
        assert!(matches!(build_plan(&cfg), Err(PlanError::ConflictingSources(_))));
    }

    #[test]
    fn task_folder_overrides_root() {
        let cfg = parse_config(r#"{"tasks": {"AB@0": {"img_folder": "own"}, "CD@0": {}}, "img_folder": "s"}"#)
            .unwrap();
        let plan = build_plan(&cfg).unwrap();
        assert_eq!(plan.source_of[&id("AB@0")], InputSource::RootFolder("own".into()));
        assert_eq!(plan.source_of[&id("CD@0")], InputSource::RootFolder("s".into()));
    }

    fn chain() -> ExecutionPlan {
        let cfg = parse_config(
            r#"{"tasks": {"AA@0": {}, "BB@0": {"pipeline_taskid": "AA@0"}, "CC@0": {"pipeline_taskid": "BB@0"}},
                "img_folder": "s"}"#,
        )
        .unwrap();
        build_plan(&cfg).unwrap()
    }

    #[test]
    fn ready_tasks_on_chain() {
        let plan = chain();
        assert_eq!(ids(&ready_tasks(&plan, &BTreeSet::new())), ["AA@0"]);
        let done: BTreeSet<_> = [id("AA@0")].into();
        assert_eq!(ids(&ready_tasks(&plan, &done)), ["BB@0"]);
    }

    #[test]
    fn ready_tasks_two_pipelines() {
        let cfg = parse_config(
            r#"{"tasks": {"SKYPE@0": {}, "REDDT@0": {"pipeline_taskid": "SKYPE@0"},
                "MASTD@0": {}, "SIGNL@0": {"pipeline_taskid": "MASTD@0"}}, "img_folder": "s"}"#,
        )
        .unwrap();
        let plan = build_plan(&cfg).unwrap();
        assert_eq!(ids(&ready_tasks(&plan, &BTreeSet::new())), ["MASTD@0", "SKYPE@0"]);
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = parse_config(
            r#"{"tasks": {"QQ@1": {}, "QQ@0": {}, "AB@3": {"pipeline_taskid": "QQ@1"}, "AA@2": {}},
                "img_folder": "s"}"#,
        )
        .unwrap();
        let a = build_plan(&cfg).unwrap();
        let b = build_plan(&cfg.clone()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ids(&a.order), ["AA@2", "QQ@0", "QQ@1", "AB@3"]);
    }
}
