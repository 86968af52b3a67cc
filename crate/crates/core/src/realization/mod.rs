//! Action realization: raw model output to `EXEC(action)` or `BLOCK(message)`.
//!
//! Pipeline: structured-call passthrough, rescue, fuzzy canonicalization,
//! identifier repair, argument rewrites, then block gates in `rule_id` order.
//! With no rules the layer is a pass-through that executes the trimmed text.

mod canonical;
mod gates;
mod rescue;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

pub use canonical::{backtick_repair, canonicalize, DEFAULT_SIMILARITY, VERB_ALIASES};
pub use gates::{Condition, GateEffect, GateRule, Rewrite, Suggestion};
pub use rescue::rescue_tool_call;

use crate::call::{parse_call_strict, ToolCall};
use crate::contract::Contract;
use crate::env::gridhouse::command_verb;
use crate::env::minidb::{normalize_answer, COMMIT_ANSWER, EXECUTE_QUERY};
use crate::env::{sql, EnvironmentEvidence};
use crate::text::quote_hint;
use crate::trajectory::{RawModelOutput, RealizationDecision, RescuePath, Trajectory};

/// Every block message starts with this marker.
pub const BLOCK_PREFIX: &str = "Blocked: ";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationConfig {
    pub similarity: f64,
    /// Identical blocked outputs at which the message lists alternatives.
    pub escalation_threshold: usize,
}

impl Default for RealizationConfig {
    fn default() -> Self {
        Self { similarity: DEFAULT_SIMILARITY, escalation_threshold: 2 }
    }
}

pub struct RealizeInput<'a> {
    pub contract: &'a Contract,
    pub evidence: &'a EnvironmentEvidence,
    pub trajectory: &'a Trajectory,
    /// Task type parsed from the original instruction.
    pub task_type: Option<&'a str>,
}

fn is_call_env(contract: &Contract) -> bool {
    contract.protocol.command_tool.is_some()
}

/// Field map read by gate conditions.
pub fn gate_fields(action: &str, raw: &RawModelOutput, input: &RealizeInput<'_>) -> BTreeMap<String, String> {
    let mut f = BTreeMap::new();
    f.insert("text".into(), raw.display());
    f.insert("action".into(), action.to_string());
    let call = parse_call_strict(action);
    let parsed = match &call {
        Some(c) => {
            f.insert("tool".into(), c.name.clone());
            f.insert("verb".into(), c.name.clone());
            if let Some(tool) = input.contract.tool(&c.name) {
                for (p, v) in tool.parameters.iter().zip(&c.args) {
                    f.insert(format!("arg.{}", p.name), v.clone());
                }
            }
            true
        }
        None if !is_call_env(input.contract) => match command_verb(action) {
            Some(v) => {
                f.insert("tool".into(), v.into());
                f.insert("verb".into(), v.into());
                true
            }
            None => false,
        },
        None => false,
    };
    f.insert("parsed".into(), parsed.to_string());
    if !input.evidence.admissible_actions.is_empty() {
        let ok = input.evidence.admissible_actions.iter().any(|a| a == action);
        f.insert("admissible".into(), ok.to_string());
    }
    for (k, v) in &input.evidence.progress_facts {
        f.insert(format!("fact.{k}"), v.clone());
    }
    if let Some(t) = input.task_type {
        f.insert("task_type".into(), t.into());
    }
    f
}

fn contained_admissible(text: &str, admissible: &[String]) -> Option<String> {
    let lower = text.to_lowercase();
    let contains = |a: &str| {
        lower.match_indices(a).any(|(i, _)| {
            let before = lower[..i].chars().next_back().map_or(true, |c| !c.is_alphanumeric());
            let after = lower[i + a.len()..].chars().next().map_or(true, |c| !c.is_alphanumeric());
            before && after
        })
    };
    let hits: Vec<&String> = admissible.iter().filter(|a| contains(a)).collect();
    let maximal: Vec<&&String> =
        hits.iter().filter(|a| !hits.iter().any(|b| b.len() > a.len() && b.contains(a.as_str()))).collect();
    match maximal.as_slice() {
        [one] => Some((**one).clone()),
        _ => None,
    }
}

fn prose_call(text: &str) -> Option<ToolCall> {
    static SQL: OnceLock<Regex> = OnceLock::new();
    static ANSWER: OnceLock<Regex> = OnceLock::new();
    let sql_re = SQL.get_or_init(|| Regex::new(r"(?i)\b(select|insert|update|delete)\b.*$").expect("static regex"));
    let answer_re = ANSWER.get_or_init(|| Regex::new(r"(?i)\banswer is:\s*(.+?)\s*$").expect("static regex"));
    for line in text.lines() {
        if let Some(m) = sql_re.find(line) {
            let q = m.as_str().trim().trim_end_matches(';').trim();
            if sql::parse(q).is_ok() {
                return Some(ToolCall::new(EXECUTE_QUERY, &[q]));
            }
        }
    }
    for line in text.lines() {
        if let Some(c) = answer_re.captures(line) {
            return Some(ToolCall::new(COMMIT_ANSWER, &[c[1].trim()]));
        }
    }
    None
}

/// The action a prose reply names, when it can be read off mechanically.
pub fn suggest_from_prose(text: &str, contract: &Contract, evidence: &EnvironmentEvidence) -> Option<String> {
    if is_call_env(contract) {
        prose_call(text).map(|c| c.render())
    } else {
        contained_admissible(text, &evidence.admissible_actions)
    }
}

fn alternatives(input: &RealizeInput<'_>) -> String {
    if is_call_env(input.contract) {
        format!(" Valid tools: {}.", input.contract.call_syntax().join(", "))
    } else {
        format!(" Admissible actions: {}.", input.evidence.admissible_actions.join(", "))
    }
}

fn block_message(
    template: &str,
    suggest: Option<Suggestion>,
    raw: &RawModelOutput,
    action: &str,
    input: &RealizeInput<'_>,
    cfg: &RealizationConfig,
) -> String {
    let hint = match suggest {
        Some(Suggestion::FromProse) => suggest_from_prose(&raw.display(), input.contract, input.evidence)
            .map(|a| format!(" Try {}.", quote_hint(&a)))
            .unwrap_or_default(),
        None => String::new(),
    };
    let tools = if is_call_env(input.contract) {
        input.contract.call_syntax().join(", ")
    } else {
        input.contract.tools.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
    };
    let mut msg = template.replace("{action}", action).replace("{tools}", &tools).replace("{hint}", &hint);
    if !msg.starts_with(BLOCK_PREFIX) {
        msg = format!("{BLOCK_PREFIX}{msg}");
    }
    let shown = raw.display();
    let prior = input
        .trajectory
        .steps
        .iter()
        .filter(|s| s.decision.is_block() && s.raw_model_output == shown)
        .count();
    if prior + 1 >= cfg.escalation_threshold {
        msg.push_str(&alternatives(input));
    }
    msg
}

/// `z_t = RealizeAction(a_t, tau_t, s_t)`.
pub fn realize(
    raw: &RawModelOutput,
    input: &RealizeInput<'_>,
    rules: &[GateRule],
    cfg: &RealizationConfig,
) -> RealizationDecision {
    let env = input.contract.environment_id.as_str();
    let mut rules: Vec<&GateRule> = rules.iter().filter(|r| r.environment_id == env).collect();
    rules.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));

    let mut action = match &raw.tool_call {
        Some(c) => c.render(),
        None => raw.text.trim().to_string(),
    };
    let mut canonicalized = false;
    let mut rescue_path = RescuePath::None;

    let active = |action: &str, want: fn(&Rewrite) -> bool| -> Vec<&GateRule> {
        let fields = gate_fields(action, raw, input);
        rules
            .iter()
            .copied()
            .filter(|r| matches!(&r.effect, GateEffect::Canonicalize { rewrite } if want(rewrite)))
            .filter(|r| r.trigger.eval(&fields))
            .collect()
    };

    if raw.tool_call.is_none()
        && parse_call_strict(&action).is_none()
        && !active(&action, |w| matches!(w, Rewrite::ToolCallRescue)).is_empty()
    {
        if let Some((call, path)) = rescue_tool_call(&raw.text, input.contract) {
            action = call.render();
            rescue_path = path;
            canonicalized = path != RescuePath::None;
        }
    }

    let admissible = &input.evidence.admissible_actions;
    if !admissible.is_empty()
        && !admissible.contains(&action)
        && !active(&action, |w| matches!(w, Rewrite::FuzzyAdmissible)).is_empty()
    {
        if let Some(a) = canonicalize(&action, admissible, cfg.similarity) {
            canonicalized |= a != action;
            action = a;
        }
    }

    if let Some(schema) = &input.evidence.schema {
        if !active(&action, |w| matches!(w, Rewrite::BacktickRepair)).is_empty() {
            if let Some(mut call) = parse_call_strict(&action) {
                if Some(call.name.as_str()) == input.contract.protocol.command_tool.as_deref() && !call.args.is_empty() {
                    let repaired = backtick_repair(&call.args[0], schema);
                    if repaired != call.args[0] {
                        call.args[0] = repaired;
                        action = call.render();
                        canonicalized = true;
                    }
                }
            }
        }
    }

    for rule in active(&action, |w| matches!(w, Rewrite::ReplaceArg { .. })) {
        let GateEffect::Canonicalize { rewrite: Rewrite::ReplaceArg { tool, arg, from, to } } = &rule.effect else {
            continue;
        };
        let Some(mut call) = parse_call_strict(&action) else { continue };
        let Some(spec) = input.contract.tool(&call.name) else { continue };
        if &call.name != tool {
            continue;
        }
        let Some(i) = spec.parameters.iter().position(|p| &p.name == arg) else { continue };
        if let Some(v) = call.args.get_mut(i) {
            if normalize_answer(v) == normalize_answer(from) && v != to {
                *v = to.clone();
                action = call.render();
                canonicalized = true;
            }
        }
    }

    let fields = gate_fields(&action, raw, input);
    for rule in &rules {
        if let GateEffect::Block { message, suggest } = &rule.effect {
            if rule.trigger.eval(&fields) {
                return RealizationDecision::block(block_message(message, *suggest, raw, &action, input, cfg));
            }
        }
    }

    let mut d = RealizationDecision::exec(action);
    d.canonicalized = canonicalized;
    d.rescue_path = rescue_path;
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{base_contract, EnvironmentEvidence};
    use crate::task::{TaskSpec, GRIDHOUSE, MINIDB};
    use crate::trajectory::DecisionKind;

    fn traj(env: &str) -> Trajectory {
        Trajectory::new(base_contract(env).unwrap(), TaskSpec::bare("t", "x", env), String::new())
    }

    fn grid_evidence() -> EnvironmentEvidence {
        EnvironmentEvidence {
            admissible_actions: vec!["look".into(), "go to shelf 1".into(), "go to shelf 12".into()],
            no_op_phrases: vec!["Nothing happens.".into()],
            ..Default::default()
        }
    }

    fn prose_gate(env: &str) -> GateRule {
        GateRule {
            rule_id: "a-prose".into(),
            environment_id: env.into(),
            trigger: Condition::eq("parsed", "false"),
            effect: GateEffect::Block { message: "not an executable action.{hint}".into(), suggest: Some(Suggestion::FromProse) },
        }
    }

    #[test]
    fn passthrough_without_rules() {
        let t = traj(GRIDHOUSE);
        let ev = grid_evidence();
        let input = RealizeInput { contract: &t.contract, evidence: &ev, trajectory: &t, task_type: None };
        let d = realize(&RawModelOutput::text("  go to shelf 1 \n"), &input, &[], &RealizationConfig::default());
        assert_eq!(d, RealizationDecision::exec("go to shelf 1"));
        let d = realize(&RawModelOutput::text("some prose"), &input, &[], &RealizationConfig::default());
        assert_eq!(d.action.as_deref(), Some("some prose"));
    }

    #[test]
    fn prose_block_with_hint_and_escalation() {
        let mut t = traj(GRIDHOUSE);
        let ev = grid_evidence();
        let rules = [prose_gate(GRIDHOUSE)];
        let raw = RawModelOutput::text("I think the next step is to go to shelf 12.");
        let cfg = RealizationConfig::default();
        let d = {
            let input = RealizeInput { contract: &t.contract, evidence: &ev, trajectory: &t, task_type: None };
            realize(&raw, &input, &rules, &cfg)
        };
        assert_eq!(d.kind, DecisionKind::Block);
        let msg = d.block_message.clone().unwrap();
        assert_eq!(msg, "Blocked: not an executable action. Try `go to shelf 12`.");
        t.steps.push(crate::trajectory::StepRecord {
            index: 0,
            raw_model_output: raw.display(),
            decision: d,
            observation: msg,
            regulation: Default::default(),
            remaining_budget: 3,
        });
        let input = RealizeInput { contract: &t.contract, evidence: &ev, trajectory: &t, task_type: None };
        let d = realize(&raw, &input, &rules, &cfg);
        assert!(d.block_message.unwrap().ends_with("Admissible actions: look, go to shelf 1, go to shelf 12."));
    }

    #[test]
    fn minidb_prose_suggestions() {
        let c = base_contract(MINIDB).unwrap();
        let ev = EnvironmentEvidence::default();
        assert_eq!(
            suggest_from_prose("The query I need is: SELECT name FROM staff;", &c, &ev),
            Some(r#"execute_query("SELECT name FROM staff")"#.into())
        );
        assert_eq!(
            suggest_from_prose("The final answer is: 35.5", &c, &ev),
            Some(r#"commit_final_answer("35.5")"#.into())
        );
        assert_eq!(suggest_from_prose("I am not sure", &c, &ev), None);
    }

    #[test]
    fn mutation_commit_gate() {
        let t = traj(MINIDB);
        let mut ev = EnvironmentEvidence::default();
        ev.progress_facts.insert("mutation_succeeded".into(), "false".into());
        let rule = GateRule {
            rule_id: "b-commit".into(),
            environment_id: MINIDB.into(),
            trigger: Condition::All(vec![
                Condition::eq("tool", COMMIT_ANSWER),
                Condition::eq("task_type", "mutation"),
                Condition::eq("fact.mutation_succeeded", "false"),
            ]),
            effect: GateEffect::Block { message: "mutation required before commit.".into(), suggest: None },
        };
        let input = RealizeInput { contract: &t.contract, evidence: &ev, trajectory: &t, task_type: Some("mutation") };
        let raw = RawModelOutput::call(ToolCall::new(COMMIT_ANSWER, &["done"]));
        let d = realize(&raw, &input, &[rule.clone()], &RealizationConfig::default());
        assert_eq!(d.block_message.as_deref(), Some("Blocked: mutation required before commit."));
        let input = RealizeInput { task_type: Some("select"), ..input };
        assert!(!realize(&raw, &input, &[rule], &RealizationConfig::default()).is_block());
    }

    #[test]
    fn rescue_and_replace_are_canonicalizations() {
        let t = traj(MINIDB);
        let ev = EnvironmentEvidence::default();
        let input = RealizeInput { contract: &t.contract, evidence: &ev, trajectory: &t, task_type: None };
        let rules = [
            GateRule {
                rule_id: "r1".into(),
                environment_id: MINIDB.into(),
                trigger: Condition::Always,
                effect: GateEffect::Canonicalize { rewrite: Rewrite::ToolCallRescue },
            },
            GateRule {
                rule_id: "r2".into(),
                environment_id: MINIDB.into(),
                trigger: Condition::Always,
                effect: GateEffect::Canonicalize {
                    rewrite: Rewrite::ReplaceArg {
                        tool: COMMIT_ANSWER.into(),
                        arg: "answer".into(),
                        from: "NULL".into(),
                        to: "0".into(),
                    },
                },
            },
        ];
        let d = realize(&RawModelOutput::text("<commit_final_answer>NULL</commit_final_answer>"), &input, &rules, &RealizationConfig::default());
        assert_eq!(d.action.as_deref(), Some(r#"commit_final_answer("0")"#));
        assert!(d.canonicalized);
        assert_eq!(d.rescue_path, RescuePath::XmlLike);
        let d = realize(&RawModelOutput::text(r#"execute_query("SELECT 1")"#), &input, &rules, &RealizationConfig::default());
        assert!(!d.canonicalized);
        assert_eq!(d.rescue_path, RescuePath::None);
    }
}
