//! The frozen policy `pi_theta` behind one interface.

mod remote;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{chat_messages, RemoteConfig, RemoteSession, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use scripted::{hint_family, Behavior, ScriptedConfig, ScriptedSession, FAULT_FAMILIES};

use crate::contract::render_contract;
use crate::env::EnvironmentHandle;
use crate::skill::SKILLS_HEADER;
use crate::task::MINIDB;
use crate::trajectory::{RawModelOutput, Trajectory};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("remote policy unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("policy configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Scripted(ScriptedConfig),
    Remote(RemoteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHandle {
    pub policy_id: String,
    #[serde(flatten)]
    pub kind: PolicyKind,
}

impl PolicyHandle {
    pub fn scripted(behavior: Behavior) -> Self {
        Self::scripted_with(ScriptedConfig::new(behavior))
    }

    pub fn scripted_with(config: ScriptedConfig) -> Self {
        Self { policy_id: config.policy_id(), kind: PolicyKind::Scripted(config) }
    }

    /// Open a per-episode session. Scripted policies receive the reference
    /// plan for the freshly initialized environment.
    pub fn start(&self, env: &EnvironmentHandle) -> Result<PolicySession, PolicyError> {
        match &self.kind {
            PolicyKind::Scripted(cfg) => Ok(PolicySession::Scripted(ScriptedSession::new(
                cfg.clone(),
                env.reference_plan(),
                env.environment_id == MINIDB,
            ))),
            PolicyKind::Remote(cfg) => Ok(PolicySession::Remote(RemoteSession::from_env(cfg.clone())?)),
        }
    }
}

pub enum PolicySession {
    Scripted(ScriptedSession),
    Remote(RemoteSession),
}

impl PolicySession {
    /// `a_t <- LLM(tau_t)`.
    pub fn next_action(&mut self, view: &ModelView, seed: u64) -> Result<RawModelOutput, PolicyError> {
        match self {
            PolicySession::Scripted(s) => Ok(s.next_action(view, seed)),
            PolicySession::Remote(r) => r.next_action(view),
        }
    }
}

/// One model turn as the model sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub output: String,
    pub observation: String,
    /// Regulation message; empty when the signal was empty.
    pub regulation: String,
}

/// Everything the model can see: contract, task, observations and harness
/// messages. Decisions are visible only through their effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelView {
    pub contract_text: String,
    pub instruction: String,
    pub initial_observation: String,
    pub turns: Vec<Turn>,
}

impl ModelView {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            contract_text: render_contract(&t.contract),
            instruction: t.task.instruction.clone(),
            initial_observation: t.initial_observation.clone(),
            turns: t
                .steps
                .iter()
                .map(|s| Turn {
                    output: s.raw_model_output.clone(),
                    observation: s.observation.clone(),
                    regulation: s.regulation.message.clone(),
                })
                .collect(),
        }
    }

    /// The instruction without any injected skills.
    pub fn base_instruction(&self) -> &str {
        let marker = format!("\n\n{SKILLS_HEADER}");
        self.instruction.split(marker.as_str()).next().unwrap_or("")
    }

    /// The injected skills section, or an empty string.
    pub fn skills_section(&self) -> &str {
        let marker = format!("\n\n{SKILLS_HEADER}");
        self.instruction.find(marker.as_str()).map_or("", |i| &self.instruction[i..])
    }
}

/// Deterministic serialization of `tau_t` into model context.
pub fn render_for_model(view: &ModelView) -> String {
    let mut out = format!(
        "{}\n# Task\n{}\n\n# Observation\n{}\n",
        view.contract_text, view.instruction, view.initial_observation
    );
    for t in &view.turns {
        out.push_str(&format!("\n> {}\n{}\n", t.output, t.observation));
        if !t.regulation.is_empty() {
            out.push_str(&format!("[environment] {}\n", t.regulation));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::base_contract;
    use crate::task::{TaskSpec, GRIDHOUSE};
    use crate::trajectory::{RealizationDecision, RegulationSignal, SignalLevel, StepRecord};

    #[test]
    fn render_zero_and_blocked_steps() {
        let mut t = Trajectory::new(
            base_contract(GRIDHOUSE).unwrap(),
            TaskSpec::bare("t", "put a mug in cabinet.", GRIDHOUSE),
            "You are in the kitchen.".into(),
        );
        let r0 = render_for_model(&ModelView::from_trajectory(&t));
        assert!(r0.ends_with("# Task\nput a mug in cabinet.\n\n# Observation\nYou are in the kitchen.\n"));
        t.steps.push(StepRecord {
            index: 0,
            raw_model_output: "hello".into(),
            decision: RealizationDecision::block("Blocked: no."),
            observation: "Blocked: no.".into(),
            regulation: RegulationSignal {
                level: SignalLevel::Warning,
                message: "Warning: x".into(),
                suggested_action: None,
                detector_id: "repetition".into(),
            },
            remaining_budget: 4,
        });
        let r1 = render_for_model(&ModelView::from_trajectory(&t));
        assert!(r1.starts_with(&r0));
        assert!(r1.ends_with("\n> hello\nBlocked: no.\n[environment] Warning: x\n"));
    }

    #[test]
    fn instruction_sections() {
        let view = ModelView {
            contract_text: String::new(),
            instruction: format!("put a mug in cabinet.\n\n{SKILLS_HEADER}\n---\n## T\nbody\n---"),
            initial_observation: String::new(),
            turns: vec![],
        };
        assert_eq!(view.base_instruction(), "put a mug in cabinet.");
        assert!(view.skills_section().contains("body"));
    }
}
