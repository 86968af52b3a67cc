//! Per-episode records shared by every layer.

use serde::{Deserialize, Serialize};

use crate::call::ToolCall;
use crate::contract::Contract;
use crate::task::TaskSpec;

/// `a_t` as emitted by the policy.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawModelOutput {
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call: Option<ToolCall>,
}

impl RawModelOutput {
    pub fn text(text: impl Into<String>) -> Self {
        Self { text: text.into(), tool_call: None }
    }

    pub fn call(call: ToolCall) -> Self {
        Self { text: String::new(), tool_call: Some(call) }
    }

    /// What the model "said": the structured call when present, else the text.
    pub fn display(&self) -> String {
        match &self.tool_call {
            Some(c) => c.render(),
            None => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescuePath {
    #[default]
    None,
    Json,
    Keyword,
    Fenced,
    XmlLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DecisionKind {
    Exec,
    Block,
}

/// `z_t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationDecision {
    pub kind: DecisionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_message: Option<String>,
    pub canonicalized: bool,
    pub rescue_path: RescuePath,
    /// Set when a regulation directive replaced the model's action.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced: bool,
}

impl RealizationDecision {
    pub fn exec(action: impl Into<String>) -> Self {
        Self {
            kind: DecisionKind::Exec,
            action: Some(action.into()),
            block_message: None,
            canonicalized: false,
            rescue_path: RescuePath::None,
            forced: false,
        }
    }

    pub fn block(message: impl Into<String>) -> Self {
        Self {
            kind: DecisionKind::Block,
            action: None,
            block_message: Some(message.into()),
            canonicalized: false,
            rescue_path: RescuePath::None,
            forced: false,
        }
    }

    pub fn is_block(&self) -> bool {
        self.kind == DecisionKind::Block
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignalLevel {
    #[default]
    Empty,
    SoftRecovery,
    Warning,
    Directive,
}

/// `r_t`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegulationSignal {
    pub level: SignalLevel,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_action: Option<String>,
    pub detector_id: String,
}

impl RegulationSignal {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.level == SignalLevel::Empty
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub raw_model_output: String,
    pub decision: RealizationDecision,
    pub observation: String,
    pub regulation: RegulationSignal,
    pub remaining_budget: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure,
    BudgetExhausted,
    EnvironmentTerminated,
}

/// `tau_t`: what the model has seen plus the harness decisions behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub contract: Contract,
    /// Task with the skill-augmented instruction `x'`.
    pub task: TaskSpec,
    pub initial_observation: String,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn new(contract: Contract, task: TaskSpec, initial_observation: String) -> Self {
        Self { contract, task, initial_observation, steps: Vec::new() }
    }
}

/// Remaining budget after step `index`: `B - t - 1`.
pub fn remaining_budget(total: usize, index: usize) -> i64 {
    total as i64 - index as i64 - 1
}
