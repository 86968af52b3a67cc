//! Rule-based failure classification with priority masking.
//!
//! Categories are checked in a fixed order; the first one whose rules fire
//! wins, so interface faults are never hidden behind later symptoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::call::parse_call_strict;
use crate::contract::Contract;
use crate::env::gridhouse::command_verb;
use crate::env::{base_contract, sql, EnvironmentHandle, NOTHING_HAPPENS};
use crate::persistence::LogRecord;
use crate::regulation::RegulationConfig;
use crate::trajectory::{Outcome, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FailureCategory {
    ActionRealization,
    ContractMismatch,
    TrajectoryDegeneration,
    ResidualReasoning,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 4] = [
        FailureCategory::ActionRealization,
        FailureCategory::ContractMismatch,
        FailureCategory::TrajectoryDegeneration,
        FailureCategory::ResidualReasoning,
    ];
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagnosisError {
    #[error("episode `{0}` succeeded; only failures are classified")]
    NotAFailure(String),
    #[error("episode `{episode}`: unknown environment `{env}`")]
    UnknownEnvironment { episode: String, env: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub episode_id: String,
    pub task_id: String,
    pub environment_id: String,
    pub category: FailureCategory,
    pub triggering_rule_id: String,
    pub evidence_steps: Vec<usize>,
    pub notes: String,
}

/// What a step tried to hand to the environment: the executed action, or
/// the raw output when it was blocked.
fn attempted(step: &StepRecord) -> &str {
    match (&step.decision.action, step.decision.is_block()) {
        (Some(a), false) => a.trim(),
        _ => step.raw_model_output.trim(),
    }
}

fn executed(step: &StepRecord) -> Option<&str> {
    (!step.decision.is_block()).then_some(()).and(step.decision.action.as_deref())
}

struct Hit {
    rule: &'static str,
    steps: Vec<usize>,
    notes: String,
}

fn hit(rule: &'static str, steps: Vec<usize>, notes: impl Into<String>) -> Option<Hit> {
    (!steps.is_empty()).then(|| Hit { rule, steps, notes: notes.into() })
}

fn action_realization(r: &LogRecord, contract: &Contract) -> Option<Hit> {
    let call_env = contract.protocol.command_tool.is_some();
    let mut unparsed = Vec::new();
    let mut bad_call = Vec::new();
    let mut dialect = Vec::new();
    for s in &r.steps {
        let a = attempted(s);
        if !call_env {
            if command_verb(a).is_none() {
                unparsed.push(s.index);
            }
            continue;
        }
        let Some(call) = parse_call_strict(a) else {
            unparsed.push(s.index);
            continue;
        };
        match contract.tool(&call.name) {
            None => bad_call.push(s.index),
            Some(t) if call.args.len() < t.required_params().count() || call.args.len() > t.parameters.len() => {
                bad_call.push(s.index)
            }
            Some(_) => {
                if Some(&call.name) == contract.protocol.command_tool.as_ref()
                    && call.args.first().is_some_and(|q| sql::parse(q).is_err())
                {
                    dialect.push(s.index);
                }
            }
        }
    }
    hit("ar.no_executable_call", unparsed, "output did not follow the action syntax")
        .or_else(|| hit("ar.invalid_call", bad_call, "unknown tool or wrong arguments"))
        .or_else(|| hit("ar.dialect", dialect, "query outside the supported dialect"))
}

fn is_mutation_sql(call_args: &[String]) -> bool {
    call_args.first().and_then(|q| sql::parse(q).ok()).is_some_and(|s| s.is_mutation())
}

fn contract_mismatch(r: &LogRecord, contract: &Contract) -> Option<Hit> {
    let p = &contract.protocol;
    let calls: Vec<(usize, crate::call::ToolCall, &StepRecord)> = r
        .steps
        .iter()
        .filter_map(|s| parse_call_strict(attempted(s)).map(|c| (s.index, c, s)))
        .collect();

    if let (Some(finish), Some(answer)) = (&p.finish_tool, &p.answer_tool) {
        let mut answered = false;
        for (i, c, s) in &calls {
            if &c.name == answer && executed(s).is_some() {
                answered = true;
            }
            if &c.name == finish && !answered {
                return hit("cm.finish_without_answer", vec![*i], format!("{finish} used where {answer} was required"));
            }
        }
    }

    if let (Some(answer), Some(tool)) = (&p.answer_tool, &p.command_tool) {
        if r.task_type.as_deref() == Some("mutation") {
            let mut mutated = false;
            for (i, c, s) in &calls {
                let failed = EnvironmentHandle::is_error_observation(&s.observation);
                if &c.name == tool && is_mutation_sql(&c.args) && !failed && executed(s).is_some() {
                    mutated = true;
                }
                if &c.name == answer && !mutated {
                    return hit("cm.commit_before_mutation", vec![*i], "answer submitted before any change was made");
                }
            }
        }
        let prose: Vec<usize> = calls
            .iter()
            .filter(|(_, c, _)| &c.name == answer)
            .filter(|(_, c, _)| c.args.first().is_some_and(|a| a.to_lowercase().contains("answer is")))
            .map(|(i, _, _)| *i)
            .collect();
        if let Some(h) = hit("cm.answer_format", prose, "answer submitted as a sentence") {
            return Some(h);
        }
    }

    if !p.precedence.is_empty() {
        let mut taken: BTreeSet<String> = BTreeSet::new();
        for s in &r.steps {
            let a = attempted(s);
            let Some(verb) = command_verb(a) else { continue };
            let object = a[verb.len()..].trim().split(" from ").next().unwrap_or("").split(" with ").next().unwrap_or("");
            let ok = s.observation.trim() != NOTHING_HAPPENS && !s.decision.is_block();
            if p.precedence.iter().any(|(before, _)| before == verb) && ok {
                taken.insert(object.to_string());
            }
            if let Some((before, _)) = p.precedence.iter().find(|(_, after)| after == verb) {
                if !taken.contains(object) {
                    return hit("cm.precedence", vec![s.index], format!("{verb} {object} without a prior {before}"));
                }
            }
        }
    }
    None
}

fn trajectory_degeneration(r: &LogRecord, cfg: &RegulationConfig) -> Option<Hit> {
    let actions: Vec<&str> = r.steps.iter().map(attempted).collect();
    if r.outcome == Outcome::BudgetExhausted {
        let k = cfg.repeat_k;
        for end in k..=actions.len() {
            let w = &actions[end - k..end];
            if w.iter().all(|a| *a == w[0]) {
                return hit("td.repetition", (end - k..end).collect(), format!("\"{}\" repeated {k} times", w[0]));
            }
        }
        for end in 4..=actions.len() {
            let w = &actions[end - 4..end];
            if w[0] == w[2] && w[1] == w[3] && w[0] != w[1] {
                return hit("td.oscillation", (end - 4..end).collect(), "alternating between two actions");
            }
        }
    }
    let mut streak: Vec<usize> = Vec::new();
    for (i, s) in r.steps.iter().enumerate() {
        let stalled = s.observation.trim() == NOTHING_HAPPENS
            || (i > 0 && s.observation == r.steps[i - 1].observation);
        if stalled {
            streak.push(s.index);
            if streak.len() >= cfg.stall_k {
                return hit("td.no_progress", streak, "observations stopped changing");
            }
        } else {
            streak.clear();
        }
    }
    // Proxy for committing early to a wrong strategy: a wrong submitted
    // answer after re-running one and the same query.
    if r.outcome == Outcome::Failure {
        let queries: Vec<(usize, &str)> = r
            .steps
            .iter()
            .filter(|s| attempted(s).starts_with("execute_query("))
            .map(|s| (s.index, attempted(s)))
            .collect();
        if queries.len() >= 2 && queries.iter().all(|(_, q)| *q == queries[0].1) {
            return hit("td.early_commit", queries.iter().map(|(i, _)| *i).collect(), "one strategy reinforced");
        }
    }
    None
}

/// Assign one primary failure category to a failed episode.
pub fn classify(record: &LogRecord) -> Result<DiagnosisReport, DiagnosisError> {
    if record.outcome == Outcome::Success {
        return Err(DiagnosisError::NotAFailure(record.episode_id.clone()));
    }
    let contract = base_contract(&record.environment_id).map_err(|_| DiagnosisError::UnknownEnvironment {
        episode: record.episode_id.clone(),
        env: record.environment_id.clone(),
    })?;
    let cfg = RegulationConfig::default();
    let found = action_realization(record, &contract)
        .map(|h| (FailureCategory::ActionRealization, h))
        .or_else(|| contract_mismatch(record, &contract).map(|h| (FailureCategory::ContractMismatch, h)))
        .or_else(|| trajectory_degeneration(record, &cfg).map(|h| (FailureCategory::TrajectoryDegeneration, h)));
    let (category, rule, steps, notes) = match found {
        Some((c, h)) => (c, h.rule.to_string(), h.steps, h.notes),
        None => (FailureCategory::ResidualReasoning, "rr.residual".to_string(), Vec::new(), String::new()),
    };
    let notes = match &record.fault {
        Some(f) if notes.is_empty() => format!("policy fault: {f}"),
        _ => notes,
    };
    Ok(DiagnosisReport {
        episode_id: record.episode_id.clone(),
        task_id: record.task_id.clone(),
        environment_id: record.environment_id.clone(),
        category,
        triggering_rule_id: rule,
        evidence_steps: steps,
        notes,
    })
}

/// Classify every failed record of a log.
pub fn diagnose_all(records: &[LogRecord]) -> Vec<DiagnosisReport> {
    records.iter().filter(|r| !r.succeeded()).filter_map(|r| classify(r).ok()).collect()
}

pub type Histogram = BTreeMap<String, BTreeMap<FailureCategory, usize>>;

/// Per-environment category counts; every category appears, possibly as 0.
pub fn histogram(reports: &[DiagnosisReport]) -> Histogram {
    let mut h: Histogram = BTreeMap::new();
    for r in reports {
        let row = h
            .entry(r.environment_id.clone())
            .or_insert_with(|| FailureCategory::ALL.into_iter().map(|c| (c, 0)).collect());
        *row.entry(r.category).or_insert(0) += 1;
    }
    h
}

/// Most frequent category overall; ties go to the earlier category.
pub fn dominant(reports: &[DiagnosisReport]) -> Option<FailureCategory> {
    let mut counts: BTreeMap<FailureCategory, usize> = BTreeMap::new();
    for r in reports {
        *counts.entry(r.category).or_insert(0) += 1;
    }
    FailureCategory::ALL
        .into_iter()
        .filter(|c| counts.get(c).copied().unwrap_or(0) > 0)
        .max_by(|a, b| counts[a].cmp(&counts[b]).then(b.cmp(a)))
}

pub fn render_histogram(h: &Histogram) -> String {
    if h.is_empty() {
        return "no failures\n".into();
    }
    let mut out = format!("{:<12}", "environment");
    for c in FailureCategory::ALL {
        let _ = write!(out, " {:>22}", format!("{c:?}"));
    }
    out.push('\n');
    for (env, row) in h {
        let _ = write!(out, "{env:<12}");
        for c in FailureCategory::ALL {
            let _ = write!(out, " {:>22}", row.get(&c).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::SCHEMA_VERSION;
    use crate::trajectory::{RealizationDecision, RegulationSignal};

    fn rec(env: &str, outcome: Outcome, steps: &[(&str, &str)]) -> LogRecord {
        LogRecord {
            schema_version: SCHEMA_VERSION,
            episode_id: "e".into(),
            task_id: "t".into(),
            environment_id: env.into(),
            task_type: None,
            run_index: 0,
            policy_id: "p".into(),
            intervention_set_id: "none".into(),
            intervention_set_version: 0,
            seed: 0,
            outcome,
            reward: 0.0,
            fault: None,
            steps: steps
                .iter()
                .enumerate()
                .map(|(i, (a, o))| StepRecord {
                    index: i,
                    raw_model_output: a.to_string(),
                    decision: RealizationDecision::exec(*a),
                    observation: o.to_string(),
                    regulation: RegulationSignal::empty(),
                    remaining_budget: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn success_is_not_classified() {
        let r = rec("minidb", Outcome::Success, &[]);
        assert!(matches!(classify(&r), Err(DiagnosisError::NotAFailure(_))));
    }

    #[test]
    fn histogram_counts() {
        assert!(histogram(&[]).is_empty());
        let r = classify(&rec("minidb", Outcome::EnvironmentTerminated, &[("finish()", "Episode finished.")])).unwrap();
        assert_eq!(r.category, FailureCategory::ContractMismatch);
        let h = histogram(&[r.clone(), r]);
        assert_eq!(h["minidb"][&FailureCategory::ContractMismatch], 2);
        assert_eq!(h["minidb"][&FailureCategory::ActionRealization], 0);
    }

    #[test]
    fn dominant_prefers_earlier_on_tie() {
        let mk = |c| DiagnosisReport {
            episode_id: String::new(),
            task_id: String::new(),
            environment_id: "x".into(),
            category: c,
            triggering_rule_id: String::new(),
            evidence_steps: vec![],
            notes: String::new(),
        };
        let rs = [mk(FailureCategory::TrajectoryDegeneration), mk(FailureCategory::ContractMismatch)];
        assert_eq!(dominant(&rs), Some(FailureCategory::ContractMismatch));
        assert_eq!(dominant(&[]), None);
    }
}
