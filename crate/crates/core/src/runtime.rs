//! The episode loop: contract layer, skill layer, then
//! model → realize → execute or block → regulate until the episode ends.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::call::parse_call_strict;
use crate::contract::{apply_all, Contract, ContractError};
use crate::env::gridhouse::command_verb;
use crate::env::minidb::COMMIT_ANSWER;
use crate::env::{parse_task_type, EnvError, EnvironmentEvidence, EnvironmentHandle};
use crate::intervention::Harness;
use crate::policy::{ModelView, PolicyHandle, PolicySession};
use crate::realization::{realize, RealizeInput};
use crate::regulation::{regulate, update_tracker, ProgressTracker, RegulateInput};
use crate::skill::{inject, retrieve};
use crate::task::{TaskSpec, GRIDHOUSE, MINIDB};
use crate::trajectory::{
    remaining_budget, Outcome, RawModelOutput, RealizationDecision, RegulationSignal, SignalLevel, StepRecord,
    Trajectory,
};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("task `{task}` targets `{task_env}` but the contract is for `{contract_env}`")]
    EnvironmentMismatch { task: String, task_env: String, contract_env: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Contract(#[from] ContractError),
}

/// One finished episode with its bookkeeping.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub trajectory: Trajectory,
    pub outcome: Outcome,
    pub reward: f64,
    pub seed: u64,
    pub run_index: usize,
    pub policy_id: String,
    pub set_id: String,
    pub set_version: u32,
    /// Task type parsed from the original instruction.
    pub task_type: Option<String>,
    /// Set when the policy itself failed mid-episode.
    pub fault: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeParams {
    pub budget: usize,
    pub seed: u64,
    pub run_index: usize,
}

/// Default step budget per environment.
pub fn default_budget(environment_id: &str) -> usize {
    match environment_id {
        MINIDB => 15,
        _ => 50,
    }
}

/// The contract `C'` the harness presents for an environment.
pub fn effective_contract(base: &Contract, harness: &Harness) -> Result<Contract, ContractError> {
    let env = base.environment_id.clone();
    apply_all(base, harness.contract_deltas.iter().filter(|d| d.applies_to(&env)))
}

/// Task with retrieved skills injected, `x'`.
pub fn effective_task(task: &TaskSpec, harness: &Harness, task_type: Option<&str>) -> TaskSpec {
    let tt = if harness.task_type_prefilter { task_type } else { None };
    let skills = retrieve(task, &harness.skills, harness.top_k, tt);
    inject(task, &skills)
}

/// The model's action is one the harness must never override.
fn is_task_critical(environment_id: &str, raw: &RawModelOutput) -> bool {
    match environment_id {
        GRIDHOUSE => command_verb(raw.text.trim()) == Some("put"),
        MINIDB => {
            let call = raw.tool_call.clone().or_else(|| parse_call_strict(raw.text.trim()));
            call.is_some_and(|c| c.name == COMMIT_ANSWER)
        }
        _ => false,
    }
}

/// A pending directive from the previous step, if it may be forced now.
fn forced_action(trajectory: &Trajectory, evidence: &EnvironmentEvidence, raw: &RawModelOutput) -> Option<String> {
    let last = trajectory.steps.last()?;
    if last.regulation.level != SignalLevel::Directive {
        return None;
    }
    let action = last.regulation.suggested_action.clone()?;
    let env = trajectory.contract.environment_id.as_str();
    if env == GRIDHOUSE && !evidence.admissible_actions.contains(&action) {
        return None;
    }
    if is_task_critical(env, raw) {
        return None;
    }
    Some(action)
}

fn outcome_of(env: &EnvironmentHandle, reward: f64) -> Outcome {
    if !env.is_end() {
        return Outcome::BudgetExhausted;
    }
    if reward >= 1.0 {
        Outcome::Success
    } else if env.evidence().fact("committed") == Some("true") {
        Outcome::Failure
    } else {
        Outcome::EnvironmentTerminated
    }
}

/// Run one episode of `task` under `harness` and `policy`.
pub fn run_episode(
    task: &TaskSpec,
    base: &Contract,
    harness: &Harness,
    policy: &PolicyHandle,
    params: EpisodeParams,
) -> Result<EpisodeRecord, RuntimeError> {
    if task.environment_id != base.environment_id {
        return Err(RuntimeError::EnvironmentMismatch {
            task: task.task_id.clone(),
            task_env: task.environment_id.clone(),
            contract_env: base.environment_id.clone(),
        });
    }
    let task_type = parse_task_type(&task.environment_id, &task.instruction);
    let contract = effective_contract(base, harness)?;
    let x_prime = effective_task(task, harness, task_type.as_deref());
    let (mut env, o0) = EnvironmentHandle::init(task, params.seed)?;
    let mut trajectory = Trajectory::new(contract, x_prime, o0);

    let mut record = EpisodeRecord {
        trajectory: Trajectory::new(trajectory.contract.clone(), trajectory.task.clone(), String::new()),
        outcome: Outcome::BudgetExhausted,
        reward: 0.0,
        seed: params.seed,
        run_index: params.run_index,
        policy_id: policy.policy_id.clone(),
        set_id: harness.set_id.clone(),
        set_version: harness.version,
        task_type: task_type.clone(),
        fault: None,
    };

    let mut session = match policy.start(&env) {
        Ok(s) => Some(s),
        Err(e) => {
            record.fault = Some(e.to_string());
            None
        }
    };
    let mut tracker = ProgressTracker::default();

    if let Some(session) = session.as_mut() {
        for t in 0..params.budget {
            let raw = match step_model(session, &trajectory, params.seed) {
                Ok(r) => r,
                Err(e) => {
                    record.fault = Some(e);
                    break;
                }
            };
            let evidence = env.evidence();
            let decision = match forced_action(&trajectory, &evidence, &raw) {
                Some(a) => RealizationDecision { forced: true, ..RealizationDecision::exec(a) },
                None => {
                    let input = RealizeInput {
                        contract: &trajectory.contract,
                        evidence: &evidence,
                        trajectory: &trajectory,
                        task_type: task_type.as_deref(),
                    };
                    realize(&raw, &input, &harness.gates, &harness.realization)
                }
            };
            let observation = match (&decision.action, &decision.block_message) {
                (Some(a), _) if !decision.is_block() => env.step(a),
                (_, Some(m)) => m.clone(),
                _ => String::new(),
            };
            let display = raw.display();
            let tracked = decision.action.clone().filter(|_| !decision.is_block()).unwrap_or_else(|| display.clone());
            let remaining = remaining_budget(params.budget, t);
            trajectory.steps.push(StepRecord {
                index: t,
                raw_model_output: display,
                decision,
                observation: observation.clone(),
                regulation: RegulationSignal::empty(),
                remaining_budget: remaining,
            });
            let evidence = env.evidence();
            update_tracker(&mut tracker, &tracked, &observation, &evidence);
            let signal = regulate(
                &harness.regulation,
                &tracker,
                &RegulateInput {
                    trajectory: &trajectory,
                    evidence: &evidence,
                    remaining_budget: remaining,
                    task_type: task_type.as_deref(),
                },
            );
            trajectory.steps.last_mut().expect("just pushed").regulation = signal;
            if env.is_end() {
                break;
            }
        }
    }

    record.reward = env.evaluate();
    record.outcome = if record.fault.is_some() { Outcome::Failure } else { outcome_of(&env, record.reward) };
    record.trajectory = trajectory;
    Ok(record)
}

fn step_model(session: &mut PolicySession, trajectory: &Trajectory, seed: u64) -> Result<RawModelOutput, String> {
    session.next_action(&ModelView::from_trajectory(trajectory), seed).map_err(|e| e.to_string())
}
