use serde::{Deserialize, Serialize};

use crate::env::gridhouse::GridWorld;
use crate::env::minidb::DbTask;

pub const GRIDHOUSE: &str = "gridhouse";
pub const MINIDB: &str = "minidb";

/// A task `x`: the instruction plus the environment-owned world definition
/// and success criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub instruction: String,
    pub environment_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<TaskFixture>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "world", rename_all = "lowercase")]
pub enum TaskFixture {
    GridHouse(GridWorld),
    MiniDb(DbTask),
}

impl TaskSpec {
    /// A task without a world, for layers that only read the instruction.
    pub fn bare(task_id: &str, instruction: &str, environment_id: &str) -> Self {
        Self {
            task_id: task_id.into(),
            instruction: instruction.into(),
            environment_id: environment_id.into(),
            fixture: None,
        }
    }
}

/// Split label carried by task suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A task suite file: one split of one environment's tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSuite {
    pub suite_id: String,
    pub split: Split,
    pub tasks: Vec<TaskSpec>,
}

impl TaskSuite {
    pub fn validate(&self) -> Result<(), String> {
        let mut ids = std::collections::BTreeSet::new();
        for t in &self.tasks {
            if t.instruction.trim().is_empty() {
                return Err(format!("task `{}` has an empty instruction", t.task_id));
            }
            if !ids.insert(&t.task_id) {
                return Err(format!("duplicate task id `{}` in suite `{}`", t.task_id, self.suite_id));
            }
        }
        Ok(())
    }
}
