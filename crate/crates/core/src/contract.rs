//! Environment contract and its enhancement by appended deltas.
//!
//! A [`Contract`] is the model-visible interaction protocol. A
//! [`ContractDelta`] only ever appends: amendment text is attached to tool
//! descriptions behind a `NOTE: ` marker, and notes and pitfalls are
//! appended to their lists. Applying the same delta twice is a no-op.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker placed between a base tool description and an amendment.
pub const AMENDMENT_SEPARATOR: &str = "\nNOTE: ";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContractError {
    #[error("delta `{delta}` amends unknown tool `{tool}`")]
    UnknownTool { delta: String, tool: String },
    #[error("duplicate tool name `{0}`")]
    DuplicateTool(String),
    #[error("tool `{tool}`: {reason}")]
    InvalidTool { tool: String, reason: String },
    #[error("malformed delta document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    /// Semantic type shown to the model, e.g. `sql` or `receptacle`.
    pub kind: String,
    pub required: bool,
}

impl ParamSpec {
    pub fn required(name: &str, kind: &str) -> Self {
        Self { name: name.into(), kind: kind.into(), required: true }
    }

    pub fn optional(name: &str, kind: &str) -> Self {
        Self { name: name.into(), kind: kind.into(), required: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParamSpec>,
    #[serde(default)]
    pub admissibility_note: String,
}

impl ToolSpec {
    pub fn new(name: &str, description: &str, parameters: Vec<ParamSpec>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            parameters,
            admissibility_note: String::new(),
        }
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.admissibility_note = note.into();
        self
    }

    pub fn required_params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.parameters.iter().filter(|p| p.required)
    }

    fn validate(&self) -> Result<(), ContractError> {
        let mut seen = BTreeSet::new();
        let mut optional_seen = false;
        for p in &self.parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(ContractError::InvalidTool {
                    tool: self.name.clone(),
                    reason: format!("duplicate parameter `{}`", p.name),
                });
            }
            if p.required && optional_seen {
                return Err(ContractError::InvalidTool {
                    tool: self.name.clone(),
                    reason: format!("required parameter `{}` follows an optional one", p.name),
                });
            }
            optional_seen |= !p.required;
        }
        Ok(())
    }
}

/// Protocol facts the environment declares about its tools. Diagnosis and
/// the realization layer read these instead of guessing from tool names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolFacts {
    /// Tool that submits the final answer, when the environment has one.
    pub answer_tool: Option<String>,
    /// Tool that ends the episode without recording an answer.
    pub finish_tool: Option<String>,
    /// Tool that fenced code blocks are routed to by rescue parsing.
    pub command_tool: Option<String>,
    /// `(before, after)` verb pairs: `after` on an object requires a prior
    /// successful `before` on the same object.
    #[serde(default)]
    pub precedence: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    pub environment_id: String,
    pub tools: Vec<ToolSpec>,
    pub policy_notes: Vec<String>,
    #[serde(default)]
    pub pitfalls: Vec<String>,
    pub answer_format: String,
    #[serde(default)]
    pub protocol: ProtocolFacts,
}

impl Contract {
    pub fn new(
        environment_id: &str,
        tools: Vec<ToolSpec>,
        policy_notes: Vec<String>,
        answer_format: &str,
        protocol: ProtocolFacts,
    ) -> Result<Self, ContractError> {
        let mut names = BTreeSet::new();
        for t in &tools {
            if !names.insert(t.name.as_str()) {
                return Err(ContractError::DuplicateTool(t.name.clone()));
            }
            t.validate()?;
        }
        Ok(Self {
            environment_id: environment_id.into(),
            tools,
            policy_notes,
            pitfalls: Vec::new(),
            answer_format: answer_format.into(),
            protocol,
        })
    }

    pub fn tool(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == name)
    }

    /// Call syntax for every tool, e.g. `execute_query("<query>")`.
    pub fn call_syntax(&self) -> Vec<String> {
        self.tools
            .iter()
            .map(|t| {
                let args: Vec<String> =
                    t.parameters.iter().map(|p| format!("\"<{}>\"", p.name)).collect();
                format!("{}({})", t.name, args.join(", "))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractDelta {
    pub delta_id: String,
    /// Environment whose contract the delta targets; empty means any.
    #[serde(default)]
    pub environment_id: String,
    #[serde(default)]
    pub tool_amendments: BTreeMap<String, String>,
    #[serde(default)]
    pub added_policy_notes: Vec<String>,
    #[serde(default)]
    pub pitfalls: Vec<String>,
}

impl ContractDelta {
    pub fn from_toml(doc: &str) -> Result<Self, ContractError> {
        toml::from_str(doc).map_err(|e| ContractError::Parse(e.to_string()))
    }

    pub fn applies_to(&self, environment_id: &str) -> bool {
        self.environment_id.is_empty() || self.environment_id == environment_id
    }

    pub fn is_empty(&self) -> bool {
        self.tool_amendments.is_empty() && self.added_policy_notes.is_empty() && self.pitfalls.is_empty()
    }
}

/// `C' = C ⊕ Δ`. The base contract is left untouched.
pub fn apply_delta(contract: &Contract, delta: &ContractDelta) -> Result<Contract, ContractError> {
    for tool in delta.tool_amendments.keys() {
        if contract.tool(tool).is_none() {
            return Err(ContractError::UnknownTool { delta: delta.delta_id.clone(), tool: tool.clone() });
        }
    }
    let mut out = contract.clone();
    for (name, text) in &delta.tool_amendments {
        let tool = out.tools.iter_mut().find(|t| &t.name == name).expect("checked above");
        let segment = format!("{AMENDMENT_SEPARATOR}{text}");
        if !tool.description.contains(&segment) {
            tool.description.push_str(&segment);
        }
    }
    for note in &delta.added_policy_notes {
        if !out.policy_notes.contains(note) {
            out.policy_notes.push(note.clone());
        }
    }
    for pitfall in &delta.pitfalls {
        if !out.pitfalls.contains(pitfall) {
            out.pitfalls.push(pitfall.clone());
        }
    }
    Ok(out)
}

/// Left-to-right composition of several deltas.
pub fn apply_all<'a>(
    contract: &Contract,
    deltas: impl IntoIterator<Item = &'a ContractDelta>,
) -> Result<Contract, ContractError> {
    deltas.into_iter().try_fold(contract.clone(), |c, d| apply_delta(&c, d))
}

pub fn render_contract(contract: &Contract) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Environment contract: {}", contract.environment_id);
    if !contract.tools.is_empty() {
        out.push_str("## Tools\n");
        for tool in &contract.tools {
            let _ = writeln!(out, "### {}", tool.name);
            let _ = writeln!(out, "{}", tool.description);
            if !tool.parameters.is_empty() {
                out.push_str("Parameters:\n");
                for p in &tool.parameters {
                    let req = if p.required { "required" } else { "optional" };
                    let _ = writeln!(out, "  - {} ({}, {})", p.name, p.kind, req);
                }
            }
            if !tool.admissibility_note.is_empty() {
                let _ = writeln!(out, "Admissibility: {}", tool.admissibility_note);
            }
        }
    }
    if !contract.policy_notes.is_empty() {
        out.push_str("## Policy notes\n");
        for n in &contract.policy_notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    if !contract.pitfalls.is_empty() {
        out.push_str("## Pitfalls\n");
        for p in &contract.pitfalls {
            let _ = writeln!(out, "- {p}");
        }
    }
    out.push_str("## Answer format\n");
    out.push_str(&contract.answer_format);
    out.push('\n');
    out
}
