//! Deterministic scripted policies with designed fault families.
//!
//! Every scripted policy follows a privileged reference plan and tracks its
//! progress by matching its own successful outputs against that plan. Fault
//! families distort the plan or the output form in a way that only one
//! harness layer can correct; all of them except Oracle obey a hint quoted in
//! the latest block or regulation message.

use serde::{Deserialize, Serialize};

use super::{ModelView, Turn};
use crate::call::{parse_call_strict, ToolCall};
use crate::env::minidb::{COMMIT_ANSWER, EXECUTE_QUERY, FINISH};
use crate::env::{EnvironmentHandle, PlanStep, StepKind};
use crate::realization::BLOCK_PREFIX;
use crate::text::{extract_hint, short_digest};
use crate::trajectory::RawModelOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Oracle,
    FreeText,
    Loop,
    WrongTool,
    PrematureCommit,
    /// Mixed fault families, one per task, chosen from the instruction.
    FollowHint,
}

impl Behavior {
    pub fn name(self) -> &'static str {
        match self {
            Behavior::Oracle => "oracle",
            Behavior::FreeText => "free_text",
            Behavior::Loop => "loop",
            Behavior::WrongTool => "wrong_tool",
            Behavior::PrematureCommit => "premature_commit",
            Behavior::FollowHint => "follow_hint",
        }
    }
}

pub const FAULT_FAMILIES: [Behavior; 4] =
    [Behavior::FreeText, Behavior::Loop, Behavior::WrongTool, Behavior::PrematureCommit];

/// Contract text that teaches the take-before-transform order.
const PICKUP_PHRASE: &str = "pick up the object before";
/// Contract text that teaches the answer tool.
const ANSWER_PHRASE: &str = "submit answers with commit_final_answer";

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedConfig {
    pub behavior: Behavior,
    /// Probability (per task and seed) that the fault family is active.
    #[serde(default = "one")]
    pub fault_rate: f64,
    /// Probability (per turn) that a quoted hint is obeyed.
    #[serde(default = "one")]
    pub hint_compliance: f64,
}

impl ScriptedConfig {
    pub fn new(behavior: Behavior) -> Self {
        Self { behavior, fault_rate: 1.0, hint_compliance: 1.0 }
    }

    pub fn policy_id(&self) -> String {
        if self.fault_rate == 1.0 && self.hint_compliance == 1.0 {
            format!("scripted:{}", self.behavior.name())
        } else {
            format!("scripted:{}@f{:.2},h{:.2}", self.behavior.name(), self.fault_rate, self.hint_compliance)
        }
    }
}

fn draw(parts: &[&str]) -> f64 {
    let hex = short_digest(parts);
    u64::from_str_radix(&hex, 16).expect("hex digest") as f64 / (u64::MAX as f64 + 1.0)
}

/// Fault family a mixed policy assigns to a task instruction.
pub fn hint_family(instruction: &str) -> Behavior {
    let i = (draw(&[instruction, "family"]) * FAULT_FAMILIES.len() as f64) as usize;
    FAULT_FAMILIES[i.min(FAULT_FAMILIES.len() - 1)]
}

fn is_failure(observation: &str) -> bool {
    EnvironmentHandle::is_error_observation(observation) || observation.starts_with(BLOCK_PREFIX)
}

/// Hint quoted in the latest block message, else in the latest regulation
/// message.
pub fn latest_hint(view: &ModelView) -> Option<&str> {
    let last: &Turn = view.turns.last()?;
    if last.observation.starts_with(BLOCK_PREFIX) {
        if let Some(h) = extract_hint(&last.observation) {
            return Some(h);
        }
    }
    extract_hint(&last.regulation)
}

pub struct ScriptedSession {
    config: ScriptedConfig,
    plan: Vec<PlanStep>,
    call_env: bool,
}

impl ScriptedSession {
    pub fn new(config: ScriptedConfig, plan: Vec<PlanStep>, call_env: bool) -> Self {
        Self { config, plan, call_env }
    }

    /// Fault family acting on this task.
    pub fn family(&self, view: &ModelView, seed: u64) -> Behavior {
        let base = view.base_instruction();
        let family = match self.config.behavior {
            Behavior::FollowHint => hint_family(base),
            b => b,
        };
        if family != Behavior::Oracle && draw(&[base, &seed.to_string(), "fault"]) >= self.config.fault_rate {
            Behavior::Oracle
        } else {
            family
        }
    }

    fn effective_plan(&self, family: Behavior, view: &ModelView) -> Vec<PlanStep> {
        let contract = view.contract_text.to_lowercase();
        let skills = view.skills_section().to_lowercase();
        let plan = &self.plan;
        match family {
            Behavior::WrongTool if self.call_env && !contract.contains(ANSWER_PHRASE) => plan
                .iter()
                .map(|s| match s.kind {
                    StepKind::Commit => PlanStep { action: ToolCall::new(FINISH, &[]).render(), kind: StepKind::Commit },
                    _ => s.clone(),
                })
                .collect(),
            Behavior::WrongTool if !self.call_env && !contract.contains(PICKUP_PHRASE) => plan
                .iter()
                .enumerate()
                .filter(|(i, s)| {
                    s.kind != StepKind::Pickup
                        || !plan[i + 1..]
                            .iter()
                            .take_while(|n| n.kind != StepKind::Place)
                            .any(|n| n.kind == StepKind::Transform)
                })
                .map(|(_, s)| s.clone())
                .collect(),
            Behavior::PrematureCommit => plan
                .iter()
                .filter(|s| match s.kind {
                    StepKind::Transform => {
                        let verb = s.action.split(' ').next().unwrap_or("");
                        skills.contains(verb)
                    }
                    StepKind::Mutation => skills.contains("mutation"),
                    _ => true,
                })
                .cloned()
                .collect(),
            _ => plan.clone(),
        }
    }

    fn last_select_result(view: &ModelView) -> Option<String> {
        view.turns.iter().rev().find_map(|t| {
            let call = parse_call_strict(&t.output)?;
            (call.name == EXECUTE_QUERY && !is_failure(&t.observation) && !t.observation.starts_with("Query OK"))
                .then(|| t.observation.clone())
        })
    }

    fn emit(&self, family: Behavior, action: &str) -> RawModelOutput {
        let call = if self.call_env { parse_call_strict(action) } else { None };
        if family == Behavior::FreeText {
            let prose = match &call {
                Some(c) if c.name == EXECUTE_QUERY => format!("The query I need is: {}", c.args[0]),
                Some(c) if c.name == COMMIT_ANSWER => format!("The final answer is: {}", c.args[0]),
                Some(_) => "I believe the task is finished.".to_string(),
                None => format!("I think the next step is to {action}."),
            };
            return RawModelOutput::text(prose);
        }
        match call {
            Some(c) => RawModelOutput::call(c),
            None => RawModelOutput::text(action),
        }
    }

    pub fn next_action(&self, view: &ModelView, seed: u64) -> RawModelOutput {
        let family = self.family(view, seed);
        if family != Behavior::Oracle {
            if let Some(hint) = latest_hint(view) {
                let turn = view.turns.len().to_string();
                if draw(&[view.base_instruction(), &seed.to_string(), &turn, "hint"]) < self.config.hint_compliance {
                    return RawModelOutput::text(hint);
                }
            }
        }
        let plan = self.effective_plan(family, view);
        let mut cursor = 0;
        for t in &view.turns {
            if cursor < plan.len() && t.output.trim() == plan[cursor].action && !is_failure(&t.observation) {
                cursor += 1;
            }
        }
        let Some(step) = plan.get(cursor) else {
            let idle = if self.call_env { ToolCall::new(FINISH, &[]).render() } else { "look".to_string() };
            return self.emit(family, &idle);
        };
        let mut action = step.action.clone();
        if step.kind == StepKind::Commit && family != Behavior::Oracle && self.call_env && action != ToolCall::new(FINISH, &[]).render() {
            let answer = Self::last_select_result(view).unwrap_or_else(|| "done".into());
            action = ToolCall::new(COMMIT_ANSWER, &[&answer]).render();
        }
        let cured = view.turns.iter().any(|t| !t.regulation.is_empty() || t.observation.starts_with(BLOCK_PREFIX));
        if family == Behavior::Loop && !cured {
            if !self.call_env && step.kind == StepKind::Navigate && plan[..cursor].iter().any(|p| p.kind == StepKind::Pickup) {
                action = "look".into();
            } else if self.call_env && step.kind == StepKind::Commit && cursor > 0 {
                action = plan[cursor - 1].action.clone();
            }
        }
        self.emit(family, &action)
    }
}
