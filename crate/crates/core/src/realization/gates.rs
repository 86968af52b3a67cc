//! Declarative gate rules and the condition language their triggers use.
//!
//! Fields a condition can read:
//! `tool`, `verb`, `text`, `action`, `parsed`, `admissible`, `task_type`,
//! `arg.<param>` and `fact.<progress fact>`. A missing field never matches
//! `eq`, `in` or `matches`, and always matches `ne`.

use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Always,
    All(Vec<Condition>),
    Any(Vec<Condition>),
    Not(Box<Condition>),
    Eq { field: String, value: String },
    Ne { field: String, value: String },
    In { field: String, values: Vec<String> },
    Matches { field: String, pattern: String },
}

impl Condition {
    pub fn eq(field: &str, value: &str) -> Self {
        Condition::Eq { field: field.into(), value: value.into() }
    }

    pub fn ne(field: &str, value: &str) -> Self {
        Condition::Ne { field: field.into(), value: value.into() }
    }

    /// Evaluate against a field map. Invalid regexes simply do not match.
    pub fn eval(&self, fields: &BTreeMap<String, String>) -> bool {
        match self {
            Condition::Always => true,
            Condition::All(cs) => cs.iter().all(|c| c.eval(fields)),
            Condition::Any(cs) => cs.iter().any(|c| c.eval(fields)),
            Condition::Not(c) => !c.eval(fields),
            Condition::Eq { field, value } => fields.get(field) == Some(value),
            Condition::Ne { field, value } => fields.get(field) != Some(value),
            Condition::In { field, values } => fields.get(field).map_or(false, |v| values.contains(v)),
            Condition::Matches { field, pattern } => match (fields.get(field), Regex::new(pattern)) {
                (Some(v), Ok(re)) => re.is_match(v),
                _ => false,
            },
        }
    }
}

/// Where a block message's `{hint}` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suggestion {
    /// The action named inside prose: the unique admissible command it
    /// contains, an embedded SQL statement that parses, or a stated answer.
    FromProse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rewrite {
    /// Route malformed text through tool-call rescue.
    ToolCallRescue,
    /// Snap near-miss commands to the unique close admissible action.
    FuzzyAdmissible,
    /// Quote schema identifiers in `execute_query` arguments.
    BacktickRepair,
    /// Replace an argument equal (after answer normalization) to `from`.
    ReplaceArg { tool: String, arg: String, from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GateEffect {
    /// Message template; `{action}`, `{hint}`, `{tools}` are substituted.
    Block {
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        suggest: Option<Suggestion>,
    },
    Canonicalize { rewrite: Rewrite },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateRule {
    pub rule_id: String,
    pub environment_id: String,
    pub trigger: Condition,
    pub effect: GateEffect,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn condition_semantics() {
        let f = fields(&[("tool", "finish"), ("fact.committed", "false")]);
        assert!(Condition::eq("tool", "finish").eval(&f));
        assert!(!Condition::eq("verb", "finish").eval(&f));
        assert!(Condition::ne("verb", "finish").eval(&f));
        assert!(Condition::All(vec![Condition::eq("tool", "finish"), Condition::eq("fact.committed", "false")]).eval(&f));
        assert!(Condition::Any(vec![Condition::eq("tool", "x"), Condition::Always]).eval(&f));
        assert!(Condition::Not(Box::new(Condition::eq("tool", "x"))).eval(&f));
        assert!(Condition::In { field: "tool".into(), values: vec!["finish".into()] }.eval(&f));
        assert!(Condition::Matches { field: "tool".into(), pattern: "^fin".into() }.eval(&f));
        assert!(!Condition::Matches { field: "tool".into(), pattern: "(".into() }.eval(&f));
    }

    #[test]
    fn rule_toml_roundtrip() {
        let rule = GateRule {
            rule_id: "g1".into(),
            environment_id: "minidb".into(),
            trigger: Condition::All(vec![Condition::eq("tool", "commit_final_answer"), Condition::eq("task_type", "mutation")]),
            effect: GateEffect::Block { message: "mutation required before commit".into(), suggest: None },
        };
        let text = toml::to_string(&rule).unwrap();
        assert_eq!(toml::from_str::<GateRule>(&text).unwrap(), rule);
    }
}
