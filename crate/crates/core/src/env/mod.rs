//! Deterministic mock environments behind one handle.
//!
//! Transitions are pure functions of `(state, action)`; the seed only picks
//! the procedural variant of the world at init time.

pub mod gridhouse;
pub mod minidb;
pub mod sql;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::Contract;
use crate::task::{TaskFixture, TaskSpec, GRIDHOUSE, MINIDB};

pub use gridhouse::{GridHouseState, NOTHING_HAPPENS};
pub use minidb::{MiniDbState, SchemaMap};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("unknown task `{task}` for environment `{env}`")]
    UnknownTask { task: String, env: String },
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("invalid world for task `{task}`: {reason}")]
    InvalidWorld { task: String, reason: String },
}

/// What the harness may observe about the current state without peeking at
/// the success criterion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentEvidence {
    /// Exact admissible commands (GridHouse). Empty for tool-call worlds.
    pub admissible_actions: Vec<String>,
    /// Table/column map (MiniDB).
    pub schema: Option<SchemaMap>,
    pub no_op_phrases: Vec<String>,
    pub progress_facts: BTreeMap<String, String>,
}

impl EnvironmentEvidence {
    pub fn fact(&self, key: &str) -> Option<&str> {
        self.progress_facts.get(key).map(String::as_str)
    }

    pub fn is_no_op(&self, observation: &str) -> bool {
        let o = observation.trim();
        self.no_op_phrases.iter().any(|p| p == o)
    }
}

/// Kind of a step in a reference plan; fault policies use it to decide
/// which step to skip or loop on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Navigate,
    Open,
    Pickup,
    Transform,
    Place,
    Query,
    Mutation,
    Commit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    GridHouse(GridHouseState),
    MiniDb(MiniDbState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentHandle {
    pub environment_id: String,
    pub rng_seed: u64,
    pub state: EnvState,
}

impl EnvironmentHandle {
    /// `s_0, o_0 = Init(x)`.
    pub fn init(task: &TaskSpec, seed: u64) -> Result<(Self, String), EnvError> {
        let unknown = || EnvError::UnknownTask { task: task.task_id.clone(), env: task.environment_id.clone() };
        let (state, obs) = match (task.environment_id.as_str(), &task.fixture) {
            (GRIDHOUSE, Some(TaskFixture::GridHouse(world))) => {
                let (s, o) = GridHouseState::init(world, seed)
                    .map_err(|reason| EnvError::InvalidWorld { task: task.task_id.clone(), reason })?;
                (EnvState::GridHouse(s), o)
            }
            (MINIDB, Some(TaskFixture::MiniDb(db))) => {
                let (s, o) = MiniDbState::init(db, seed);
                (EnvState::MiniDb(s), o)
            }
            (GRIDHOUSE | MINIDB, _) => return Err(unknown()),
            (other, _) => return Err(EnvError::UnknownEnvironment(other.into())),
        };
        Ok((Self { environment_id: task.environment_id.clone(), rng_seed: seed, state }, obs))
    }

    /// `s_{t+1}, o_{t+1} = Step(s_t, a_t)`. Problems surface as observations.
    pub fn step(&mut self, action: &str) -> String {
        match &mut self.state {
            EnvState::GridHouse(s) => s.step(action),
            EnvState::MiniDb(s) => s.step(action),
        }
    }

    pub fn is_end(&self) -> bool {
        match &self.state {
            EnvState::GridHouse(s) => s.goal_satisfied(),
            EnvState::MiniDb(s) => s.is_terminal(),
        }
    }

    pub fn evaluate(&self) -> f64 {
        match &self.state {
            EnvState::GridHouse(s) => f64::from(u8::from(s.goal_satisfied())),
            EnvState::MiniDb(s) => s.evaluate(),
        }
    }

    pub fn evidence(&self) -> EnvironmentEvidence {
        match &self.state {
            EnvState::GridHouse(s) => s.evidence(),
            EnvState::MiniDb(s) => s.evidence(),
        }
    }

    /// Privileged shortest plan for the current state. Only scripted test
    /// policies consume it.
    pub fn reference_plan(&self) -> Vec<PlanStep> {
        match &self.state {
            EnvState::GridHouse(s) => s.reference_plan(),
            EnvState::MiniDb(s) => s.reference_plan(),
        }
    }

    /// Whether an observation reports a failed action.
    pub fn is_error_observation(observation: &str) -> bool {
        let o = observation.trim();
        o == NOTHING_HAPPENS || o.starts_with("Error:")
    }
}

/// The unmodified contract `C` each environment publishes.
pub fn base_contract(environment_id: &str) -> Result<Contract, EnvError> {
    match environment_id {
        GRIDHOUSE => Ok(gridhouse::base_contract()),
        MINIDB => Ok(minidb::base_contract()),
        other => Err(EnvError::UnknownEnvironment(other.into())),
    }
}

/// Task type parsed from the instruction text alone.
pub fn parse_task_type(environment_id: &str, instruction: &str) -> Option<String> {
    match environment_id {
        GRIDHOUSE => gridhouse::Goal::parse(instruction).map(|g| g.task_type().to_string()),
        MINIDB => minidb::parse_task_kind(instruction).map(|k| k.as_str().to_string()),
        _ => None,
    }
}
