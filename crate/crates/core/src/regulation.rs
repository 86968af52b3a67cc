//! Post-execution trajectory regulation `r_t`.
//!
//! Detectors run in priority order (budget, repetition, no-progress,
//! oscillation) and the first one that fires wins, except that a detector
//! which fired on the previous step at a higher level is kept while its
//! condition persists.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::env::gridhouse::{type_of, Goal};
use crate::env::minidb::COMMIT_ANSWER;
use crate::env::{EnvironmentEvidence, EnvironmentHandle};
use crate::call::ToolCall;
use crate::text::{observation_hash, quote_hint};
use crate::trajectory::{RegulationSignal, SignalLevel, Trajectory};

pub const HISTORY_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Budget,
    Repetition,
    NoProgress,
    Oscillation,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] =
        [DetectorKind::Budget, DetectorKind::Repetition, DetectorKind::NoProgress, DetectorKind::Oscillation];

    pub fn id(self) -> &'static str {
        match self {
            DetectorKind::Budget => "budget",
            DetectorKind::Repetition => "repetition",
            DetectorKind::NoProgress => "no_progress",
            DetectorKind::Oscillation => "oscillation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegulationConfig {
    pub enabled: BTreeSet<DetectorKind>,
    pub repeat_k: usize,
    pub stall_k: usize,
    pub oscillation_window: usize,
    pub budget_warn: i64,
}

impl Default for RegulationConfig {
    fn default() -> Self {
        Self { enabled: BTreeSet::new(), repeat_k: 3, stall_k: 3, oscillation_window: 6, budget_warn: 2 }
    }
}

impl RegulationConfig {
    pub fn all_enabled() -> Self {
        Self { enabled: DetectorKind::ALL.into_iter().collect(), ..Self::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgressTracker {
    pub action_history: VecDeque<(String, u64)>,
    /// Length of the current run of identical observations (0 when the
    /// latest observation differs from the one before it).
    pub no_progress_streak: usize,
    /// Consecutive observations that were no-ops, errors or blocks.
    pub failed_streak: usize,
    pub visited_state_hashes: BTreeSet<u64>,
}

impl ProgressTracker {
    pub fn actions(&self) -> impl DoubleEndedIterator<Item = &str> {
        self.action_history.iter().map(|(a, _)| a.as_str())
    }
}

pub fn update_tracker(tracker: &mut ProgressTracker, action: &str, observation: &str, evidence: &EnvironmentEvidence) {
    let h = observation_hash(observation);
    let same = tracker.action_history.back().map_or(false, |(_, prev)| *prev == h);
    tracker.no_progress_streak = if same { tracker.no_progress_streak.max(1) + 1 } else { 0 };
    let failed = evidence.is_no_op(observation) || EnvironmentHandle::is_error_observation(observation);
    tracker.failed_streak = if failed { tracker.failed_streak + 1 } else { 0 };
    tracker.action_history.push_back((action.trim().to_string(), h));
    while tracker.action_history.len() > HISTORY_LEN {
        tracker.action_history.pop_front();
    }
    let location = (evidence.fact("room"), evidence.fact("at"));
    if location != (None, None) {
        let key = format!("{}|{}", location.0.unwrap_or(""), location.1.unwrap_or(""));
        tracker.visited_state_hashes.insert(observation_hash(&key));
    }
}

pub struct RegulateInput<'a> {
    pub trajectory: &'a Trajectory,
    pub evidence: &'a EnvironmentEvidence,
    pub remaining_budget: i64,
    pub task_type: Option<&'a str>,
}

/// A receptacle the agent has not visited yet, reachable right now.
fn unvisited_alternative(evidence: &EnvironmentEvidence) -> Option<String> {
    let visited: BTreeSet<&str> = evidence.fact("visited").unwrap_or("").split(',').collect();
    evidence
        .admissible_actions
        .iter()
        .filter_map(|a| a.strip_prefix("go to ").map(|t| (a, t)))
        .find(|(_, t)| type_of(t) != *t && !visited.contains(t))
        .map(|(a, _)| a.clone())
}

/// A commit the evidence makes plausible (MiniDB).
fn commit_candidate(input: &RegulateInput<'_>) -> Option<String> {
    let ev = input.evidence;
    if ev.fact("committed") != Some("false") {
        return None;
    }
    if input.task_type == Some("mutation") {
        return (ev.fact("mutation_succeeded") == Some("true")).then(|| ToolCall::new(COMMIT_ANSWER, &["done"]).render());
    }
    ev.fact("last_result").map(|r| ToolCall::new(COMMIT_ANSWER, &[r]).render())
}

fn alternative(input: &RegulateInput<'_>) -> Option<String> {
    if input.evidence.schema.is_some() {
        commit_candidate(input)
    } else {
        unvisited_alternative(input.evidence)
    }
}

/// The action that completes the task outright, when it is mechanically
/// certain.
fn completing_action(input: &RegulateInput<'_>) -> Option<String> {
    let ev = input.evidence;
    if ev.schema.is_some() {
        return match input.task_type {
            Some("mutation") => commit_candidate(input),
            _ => None,
        };
    }
    let goal = Goal::parse(&input.trajectory.task.instruction)?;
    let held = ev.fact("inventory").filter(|h| !h.is_empty())?;
    if type_of(held) != goal.object_type {
        return None;
    }
    if let Some(a) = goal.attribute {
        let state = ev.fact("inventory_state").unwrap_or("");
        if !state.split(',').any(|s| s == a.adjective()) {
            return None;
        }
    }
    let prefix = format!("put {held} in/on ");
    ev.admissible_actions
        .iter()
        .find(|a| a.strip_prefix(&prefix).map_or(false, |d| type_of(d) == goal.destination_type))
        .cloned()
}

fn signal(level: SignalLevel, kind: DetectorKind, message: String, suggested: Option<String>) -> RegulationSignal {
    RegulationSignal { level, message, suggested_action: suggested, detector_id: kind.id().into() }
}

fn with_hint(base: String, lead: &str, suggested: &Option<String>) -> String {
    match suggested {
        Some(a) => format!("{base} {lead} {}.", quote_hint(a)),
        None => base,
    }
}

fn detect(kind: DetectorKind, cfg: &RegulationConfig, tracker: &ProgressTracker, input: &RegulateInput<'_>) -> Option<RegulationSignal> {
    match kind {
        DetectorKind::Budget => {
            if input.remaining_budget > cfg.budget_warn {
                return None;
            }
            let left = input.remaining_budget.max(0);
            if let Some(a) = completing_action(input) {
                let msg = with_hint(format!("Directive: only {left} step(s) remain."), "Complete the task now with", &Some(a.clone()));
                return Some(signal(SignalLevel::Directive, kind, msg, Some(a)));
            }
            let suggested = if input.evidence.schema.is_some() { commit_candidate(input) } else { None };
            let msg = with_hint(format!("Warning: only {left} step(s) remain."), "Consider", &suggested);
            Some(signal(SignalLevel::Warning, kind, msg, suggested))
        }
        DetectorKind::Repetition => {
            let k = cfg.repeat_k.max(1);
            if tracker.action_history.len() < k {
                return None;
            }
            let mut recent = tracker.actions().rev().take(k);
            let last = recent.next()?;
            if !recent.all(|a| a == last) {
                return None;
            }
            let suggested = alternative(input).filter(|s| s != last);
            let base = format!("Warning: the action \"{last}\" has been repeated {k} times in a row.");
            Some(signal(SignalLevel::Warning, kind, with_hint(base, "Try", &suggested), suggested))
        }
        DetectorKind::NoProgress => {
            let stall = tracker.no_progress_streak.max(tracker.failed_streak);
            if stall < cfg.stall_k {
                return None;
            }
            let suggested = alternative(input);
            let base = format!("No progress in the last {stall} steps.");
            Some(signal(SignalLevel::SoftRecovery, kind, with_hint(base, "Consider", &suggested), suggested))
        }
        DetectorKind::Oscillation => {
            let acts: Vec<&str> = tracker.actions().rev().take(cfg.oscillation_window).collect();
            if acts.len() < 4 || acts[0] == acts[1] || acts[0] != acts[2] || acts[1] != acts[3] {
                return None;
            }
            let suggested = alternative(input).filter(|s| s != acts[0] && s != acts[1]);
            let base = format!("Warning: alternating between \"{}\" and \"{}\".", acts[1], acts[0]);
            Some(signal(SignalLevel::Warning, kind, with_hint(base, "Try", &suggested), suggested))
        }
    }
}

/// `r_t = RegulateTrajectory(tau_t, a_t, o_{t+1}, b_t)`. Call after the
/// step has been appended and the tracker updated.
pub fn regulate(cfg: &RegulationConfig, tracker: &ProgressTracker, input: &RegulateInput<'_>) -> RegulationSignal {
    let firing: Vec<RegulationSignal> = DetectorKind::ALL
        .into_iter()
        .filter(|k| cfg.enabled.contains(k))
        .filter_map(|k| detect(k, cfg, tracker, input))
        .collect();
    let Some(first) = firing.first() else { return RegulationSignal::empty() };
    let steps = &input.trajectory.steps;
    let previous = steps.len().checked_sub(2).map(|i| &steps[i].regulation);
    if let Some(prev) = previous.filter(|p| p.level > first.level) {
        if let Some(kept) = firing.iter().find(|s| s.detector_id == prev.detector_id && s.level >= prev.level) {
            return kept.clone();
        }
    }
    first.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::base_contract;
    use crate::task::{TaskSpec, GRIDHOUSE};
    use crate::trajectory::{RealizationDecision, StepRecord};

    fn traj(instruction: &str, n: usize) -> Trajectory {
        let mut t = Trajectory::new(base_contract(GRIDHOUSE).unwrap(), TaskSpec::bare("t", instruction, GRIDHOUSE), String::new());
        for i in 0..n {
            t.steps.push(StepRecord {
                index: i,
                raw_model_output: String::new(),
                decision: RealizationDecision::exec("look"),
                observation: String::new(),
                regulation: RegulationSignal::empty(),
                remaining_budget: 0,
            });
        }
        t
    }

    fn evidence(admissible: &[&str], facts: &[(&str, &str)]) -> EnvironmentEvidence {
        EnvironmentEvidence {
            admissible_actions: admissible.iter().map(|s| s.to_string()).collect(),
            schema: None,
            no_op_phrases: vec!["Nothing happens.".into()],
            progress_facts: facts.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    #[test]
    fn tracker_streaks() {
        let ev = evidence(&[], &[]);
        let mut t = ProgressTracker::default();
        update_tracker(&mut t, "look", "a", &ev);
        assert_eq!(t.no_progress_streak, 0);
        update_tracker(&mut t, "look", "a", &ev);
        assert_eq!(t.no_progress_streak, 2);
        update_tracker(&mut t, "look", "b", &ev);
        assert_eq!(t.no_progress_streak, 0);
        for _ in 0..20 {
            update_tracker(&mut t, "x", "Nothing happens.", &ev);
        }
        assert_eq!(t.action_history.len(), HISTORY_LEN);
        assert_eq!(t.failed_streak, 20);
    }

    #[test]
    fn visited_grows_with_location() {
        let mut t = ProgressTracker::default();
        update_tracker(&mut t, "go to kitchen", "o1", &evidence(&[], &[("room", "kitchen"), ("at", "")]));
        update_tracker(&mut t, "go to hall", "o2", &evidence(&[], &[("room", "hall"), ("at", "")]));
        assert_eq!(t.visited_state_hashes.len(), 2);
    }

    #[test]
    fn first_step_is_empty() {
        let cfg = RegulationConfig::all_enabled();
        let ev = evidence(&["look"], &[]);
        let mut tr = ProgressTracker::default();
        update_tracker(&mut tr, "look", "You see a room.", &ev);
        let t = traj("put a mug in cabinet.", 1);
        let input = RegulateInput { trajectory: &t, evidence: &ev, remaining_budget: 10, task_type: None };
        assert!(regulate(&cfg, &tr, &input).is_empty());
    }

    #[test]
    fn repetition_warns_with_unvisited_hint() {
        let cfg = RegulationConfig::all_enabled();
        let ev = evidence(&["look", "go to shelf 1", "go to desk 1", "go to hall"], &[("visited", "shelf 1")]);
        let mut tr = ProgressTracker::default();
        for _ in 0..3 {
            update_tracker(&mut tr, "take mug 1 from shelf 1", "Nothing happens.", &ev);
        }
        let t = traj("put a mug in cabinet.", 3);
        let input = RegulateInput { trajectory: &t, evidence: &ev, remaining_budget: 10, task_type: None };
        let s = regulate(&cfg, &tr, &input);
        assert_eq!(s.level, SignalLevel::Warning);
        assert_eq!(s.detector_id, "repetition");
        assert_eq!(s.suggested_action.as_deref(), Some("go to desk 1"));
    }

    #[test]
    fn budget_directive_when_put_completes() {
        let cfg = RegulationConfig::all_enabled();
        let ev = evidence(
            &["look", "put mug 1 in/on cabinet 1"],
            &[("inventory", "mug 1"), ("inventory_state", "clean")],
        );
        let mut tr = ProgressTracker::default();
        update_tracker(&mut tr, "go to cabinet 1", "You arrive at cabinet 1.", &ev);
        let t = traj("put a clean mug in cabinet.", 1);
        let input = RegulateInput { trajectory: &t, evidence: &ev, remaining_budget: 1, task_type: None };
        let s = regulate(&cfg, &tr, &input);
        assert_eq!(s.level, SignalLevel::Directive);
        assert_eq!(s.suggested_action.as_deref(), Some("put mug 1 in/on cabinet 1"));
        let dirty = evidence(&["look", "put mug 1 in/on cabinet 1"], &[("inventory", "mug 1"), ("inventory_state", "")]);
        let input = RegulateInput { evidence: &dirty, ..input };
        assert_eq!(regulate(&cfg, &tr, &input).level, SignalLevel::Warning);
    }

    #[test]
    fn oscillation_detected() {
        let cfg = RegulationConfig::all_enabled();
        let ev = evidence(&["go to a 1", "go to b 1"], &[]);
        let mut tr = ProgressTracker::default();
        for (i, a) in ["go to a 1", "go to b 1", "go to a 1", "go to b 1"].iter().enumerate() {
            update_tracker(&mut tr, a, &format!("o{i}"), &ev);
        }
        let t = traj("put a mug in cabinet.", 4);
        let input = RegulateInput { trajectory: &t, evidence: &ev, remaining_budget: 10, task_type: None };
        assert_eq!(regulate(&cfg, &tr, &input).detector_id, "oscillation");
    }

    #[test]
    fn disabled_detectors_stay_quiet() {
        let cfg = RegulationConfig::default();
        let ev = evidence(&[], &[]);
        let mut tr = ProgressTracker::default();
        for _ in 0..5 {
            update_tracker(&mut tr, "look", "same", &ev);
        }
        let t = traj("x", 5);
        let input = RegulateInput { trajectory: &t, evidence: &ev, remaining_budget: 0, task_type: None };
        assert!(regulate(&cfg, &tr, &input).is_empty());
    }
}
