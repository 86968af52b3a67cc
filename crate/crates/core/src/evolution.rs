//! Greedy harness evolution on a training suite.

use serde::Serialize;
use thiserror::Error;

use crate::diagnosis::{diagnose_all, dominant, FailureCategory};
use crate::intervention::{Harness, Intervention, InterventionError, InterventionSet, Layer, LayerToggles};
use crate::persistence::LogRecord;
use crate::policy::PolicyHandle;
use crate::runner::{run_suite, SuiteParams};
use crate::runtime::{EpisodeRecord, RuntimeError};
use crate::task::{Split, TaskSuite};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("training suite has no tasks")]
    EmptyTrainSet,
    #[error("suite `{0}` is a test split; evolution only runs on training tasks")]
    TestSplit(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Intervention(#[from] InterventionError),
}

/// Layer whose interventions target a failure category.
pub fn layer_for(c: FailureCategory) -> Layer {
    match c {
        FailureCategory::ActionRealization => Layer::ActionGate,
        FailureCategory::ContractMismatch => Layer::Contract,
        FailureCategory::TrajectoryDegeneration => Layer::Regulation,
        FailureCategory::ResidualReasoning => Layer::Skill,
    }
}

/// Successes per task, in suite order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Scores {
    pub per_task: Vec<(String, usize)>,
}

impl Scores {
    fn of(suite: &TaskSuite, records: &[EpisodeRecord]) -> Self {
        let per_task = suite
            .tasks
            .iter()
            .map(|t| {
                let n = records.iter().filter(|r| r.trajectory.task.task_id == t.task_id && r.reward >= 1.0).count();
                (t.task_id.clone(), n)
            })
            .collect();
        Self { per_task }
    }

    pub fn total(&self) -> usize {
        self.per_task.iter().map(|(_, n)| n).sum()
    }

    /// Tasks that score lower in `other`.
    pub fn regressions(&self, other: &Scores) -> Vec<String> {
        self.per_task
            .iter()
            .zip(&other.per_task)
            .filter(|((_, a), (_, b))| b < a)
            .map(|((id, _), _)| id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub round: usize,
    pub intervention_id: String,
    pub layer: Layer,
    pub before: usize,
    pub after: usize,
    pub regressed: Vec<String>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Round {
    pub round: usize,
    pub dominant: Option<FailureCategory>,
    pub score: usize,
    pub accepted: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionReport {
    pub rounds: Vec<Round>,
    pub trials: Vec<Trial>,
    /// Training successes before the first round and after each acceptance.
    pub train_scores: Vec<usize>,
    pub episodes_per_pass: usize,
    pub set: InterventionSet,
}

impl EvolutionReport {
    pub fn accepted(&self) -> Vec<&str> {
        self.set.interventions.iter().map(|i| i.intervention_id.as_str()).collect()
    }

    pub fn rejected(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .trials
            .iter()
            .filter(|t| !t.accepted && !self.set.contains(&t.intervention_id))
            .map(|t| t.intervention_id.as_str())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.rounds {
            let dom = r.dominant.map_or("none".to_string(), |c| format!("{c:?}"));
            let acc = r.accepted.as_deref().unwrap_or("-");
            s.push_str(&format!("round {}: score {}/{} dominant {} accepted {}\n", r.round, r.score, self.episodes_per_pass, dom, acc));
        }
        for t in self.trials.iter().filter(|t| !t.accepted && !t.regressed.is_empty()) {
            s.push_str(&format!("  rejected {} (round {}): regressed {}\n", t.intervention_id, t.round, t.regressed.join(", ")));
        }
        s.push_str(&format!("final set {} v{}: {}\n", self.set.set_id, self.set.version, self.accepted().join(", ")));
        s
    }
}

fn evaluate(
    suite: &TaskSuite,
    set: &InterventionSet,
    policy: &PolicyHandle,
    params: SuiteParams,
) -> Result<(Scores, Vec<EpisodeRecord>), EvolutionError> {
    let harness = Harness::compile(set, LayerToggles::default())?;
    let records = run_suite(&suite.tasks, &harness, policy, params)?;
    Ok((Scores::of(suite, &records), records))
}

/// Grow an intervention set one accepted candidate at a time.
///
/// Each round diagnoses the current failures and tries candidates from the
/// layer matching the dominant category first, then the rest in registry
/// order. A candidate is kept only if it raises the total score without
/// lowering any task. Evolution stops after a round with no acceptance.
pub fn evolve(
    registry: &[Intervention],
    suite: &TaskSuite,
    policy: &PolicyHandle,
    params: SuiteParams,
    set_id: &str,
) -> Result<EvolutionReport, EvolutionError> {
    if suite.split != Split::Train {
        return Err(EvolutionError::TestSplit(suite.suite_id.clone()));
    }
    if suite.tasks.is_empty() {
        return Err(EvolutionError::EmptyTrainSet);
    }
    let mut set = InterventionSet::new(set_id);
    let (mut scores, mut records) = evaluate(suite, &set, policy, params)?;
    let mut report = EvolutionReport {
        rounds: Vec::new(),
        trials: Vec::new(),
        train_scores: vec![scores.total()],
        episodes_per_pass: records.len(),
        set: set.clone(),
    };
    for round in 1.. {
        let logs: Vec<LogRecord> = records.iter().map(LogRecord::from_episode).collect();
        let dom = dominant(&diagnose_all(&logs));
        let mut order: Vec<&Intervention> = registry.iter().filter(|i| !set.contains(&i.intervention_id)).collect();
        if let Some(c) = dom {
            order.sort_by_key(|i| i.layer != layer_for(c));
        }
        let mut accepted = None;
        for cand in order {
            let mut trial_set = set.clone();
            trial_set.push(cand.clone())?;
            let (s, r) = evaluate(suite, &trial_set, policy, params)?;
            let regressed = scores.regressions(&s);
            let ok = s.total() > scores.total() && regressed.is_empty();
            report.trials.push(Trial {
                round,
                intervention_id: cand.intervention_id.clone(),
                layer: cand.layer,
                before: scores.total(),
                after: s.total(),
                regressed,
                accepted: ok,
            });
            if ok {
                set = trial_set;
                scores = s;
                records = r;
                accepted = Some(cand.intervention_id.clone());
                break;
            }
        }
        report.rounds.push(Round { round, dominant: dom, score: scores.total(), accepted: accepted.clone() });
        if accepted.is_none() {
            break;
        }
        report.train_scores.push(scores.total());
    }
    report.set = set.freeze();
    Ok(report)
}
