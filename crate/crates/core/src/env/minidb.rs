//! MiniDB: an in-memory relational world driven by tool calls.
//!
//! Every action must be exactly one call in canonical syntax
//! (`execute_query("SELECT ...")`, `commit_final_answer("42")`, `finish()`).
//! Anything else is answered with an error observation and changes nothing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sql::{self, is_reserved, QueryOutput, Table};
use super::{EnvironmentEvidence, PlanStep, StepKind};
use crate::call::{parse_call_strict, ToolCall};
use crate::contract::{Contract, ParamSpec, ProtocolFacts, ToolSpec};
use crate::text::collapse_whitespace;

pub const EXECUTE_QUERY: &str = "execute_query";
pub const COMMIT_ANSWER: &str = "commit_final_answer";
pub const FINISH: &str = "finish";
pub const TOOL_NAMES: [&str; 3] = [EXECUTE_QUERY, COMMIT_ANSWER, FINISH];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbTaskKind {
    Select,
    Count,
    Aggregate,
    Mutation,
}

impl DbTaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DbTaskKind::Select => "select",
            DbTaskKind::Count => "count",
            DbTaskKind::Aggregate => "aggregate",
            DbTaskKind::Mutation => "mutation",
        }
    }
}

/// Task kind from instruction wording alone.
pub fn parse_task_kind(instruction: &str) -> Option<DbTaskKind> {
    let lower = instruction.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    let has = |w: &str| words.contains(&w);
    if words.is_empty() {
        return None;
    }
    if ["insert", "update", "delete", "remove", "add", "change", "set"].iter().any(|w| has(w)) {
        Some(DbTaskKind::Mutation)
    } else if lower.contains("how many") || has("count") || has("number") {
        Some(DbTaskKind::Count)
    } else if ["total", "sum", "average", "maximum", "minimum", "highest", "lowest", "largest", "smallest"]
        .iter()
        .any(|w| has(w))
    {
        Some(DbTaskKind::Aggregate)
    } else {
        Some(DbTaskKind::Select)
    }
}

/// Post-condition checked after a mutation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    pub query: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbTask {
    pub tables: Vec<Table>,
    pub kind: DbTaskKind,
    /// Expected committed answer (ignored for mutations).
    #[serde(default)]
    pub truth: String,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    /// Statements of the reference solution, in order.
    pub reference_sql: Vec<String>,
}

/// Display identifiers for every table and column. Names with spaces or
/// reserved words are shown backtick-quoted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub tables: BTreeMap<String, Vec<String>>,
}

impl SchemaMap {
    pub fn from_tables(tables: &[Table]) -> Self {
        Self {
            tables: tables
                .iter()
                .map(|t| (t.name.clone(), t.columns.iter().map(|c| c.name.clone()).collect()))
                .collect(),
        }
    }

    pub fn needs_quoting(name: &str) -> bool {
        name.contains(char::is_whitespace) || is_reserved(name)
    }

    pub fn display_ident(name: &str) -> String {
        if Self::needs_quoting(name) {
            format!("`{name}`")
        } else {
            name.to_string()
        }
    }

    /// Every identifier that must be quoted.
    pub fn quoted_identifiers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .tables
            .iter()
            .flat_map(|(t, cols)| std::iter::once(t.as_str()).chain(cols.iter().map(String::as_str)))
            .filter(|n| Self::needs_quoting(n))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Canonical answer form: trimmed, single-spaced, lower-cased, with each
/// comma-separated numeric item in shortest decimal form.
pub fn normalize_answer(answer: &str) -> String {
    let collapsed = collapse_whitespace(answer.trim()).to_lowercase();
    collapsed
        .split(',')
        .map(|item| {
            let item = item.trim();
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    if v.fract() == 0.0 && v.abs() < 1e15 {
                        format!("{}", v as i64)
                    } else {
                        format!("{v}")
                    }
                }
                _ => item.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiniDbState {
    pub tables: Vec<Table>,
    pub task: DbTask,
    pub committed: Option<String>,
    pub finished: bool,
    pub mutation_succeeded: bool,
    pub last_result: Option<String>,
    pub queries_run: usize,
}

fn arity(name: &str) -> usize {
    if name == FINISH {
        0
    } else {
        1
    }
}

impl MiniDbState {
    pub fn init(task: &DbTask, seed: u64) -> (Self, String) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tables = task.tables.clone();
        for t in &mut tables {
            t.rows.shuffle(&mut rng);
        }
        let state = Self {
            tables,
            task: task.clone(),
            committed: None,
            finished: false,
            mutation_succeeded: false,
            last_result: None,
            queries_run: 0,
        };
        let obs = state.overview();
        (state, obs)
    }

    fn overview(&self) -> String {
        let mut s = String::from("Tools: execute_query(\"<query>\"), commit_final_answer(\"<answer>\"), finish().\nTables:");
        for t in &self.tables {
            let cols: Vec<String> = t
                .columns
                .iter()
                .map(|c| format!("{} {}", SchemaMap::display_ident(&c.name), c.ty))
                .collect();
            s.push_str(&format!("\n- {} ({})", SchemaMap::display_ident(&t.name), cols.join(", ")));
        }
        s
    }

    pub fn is_terminal(&self) -> bool {
        self.finished
    }

    pub fn step(&mut self, action: &str) -> String {
        if self.finished {
            return "Error: the episode has already ended.".into();
        }
        let Some(call) = parse_call_strict(action) else {
            return "Error: no tool call found. Reply with exactly one tool call.".into();
        };
        if !TOOL_NAMES.contains(&call.name.as_str()) {
            return format!("Error: unknown tool {}.", call.name);
        }
        if call.args.len() != arity(&call.name) {
            return format!("Error: {} expects {} argument(s), got {}.", call.name, arity(&call.name), call.args.len());
        }
        match call.name.as_str() {
            EXECUTE_QUERY => {
                self.queries_run += 1;
                match sql::run(&mut self.tables, &call.args[0]) {
                    Ok(out) => {
                        let text = out.render();
                        match out {
                            QueryOutput::Affected(n) => {
                                if n > 0 {
                                    self.mutation_succeeded = true;
                                }
                            }
                            _ => self.last_result = Some(text.clone()),
                        }
                        text
                    }
                    Err(e) => e,
                }
            }
            COMMIT_ANSWER => {
                self.committed = Some(call.args[0].clone());
                self.finished = true;
                "Answer submitted.".into()
            }
            _ => {
                self.finished = true;
                "Episode finished.".into()
            }
        }
    }

    pub fn evaluate(&self) -> f64 {
        let Some(answer) = &self.committed else { return 0.0 };
        let ok = match self.task.kind {
            DbTaskKind::Mutation => {
                self.mutation_succeeded
                    && self.task.verify.as_ref().map_or(true, |v| {
                        let mut tables = self.tables.clone();
                        sql::run(&mut tables, &v.query)
                            .map(|o| normalize_answer(&o.render()) == normalize_answer(&v.expected))
                            .unwrap_or(false)
                    })
            }
            _ => normalize_answer(answer) == normalize_answer(&self.task.truth),
        };
        f64::from(u8::from(ok))
    }

    pub fn evidence(&self) -> EnvironmentEvidence {
        let mut facts = BTreeMap::new();
        facts.insert("committed".into(), self.committed.is_some().to_string());
        facts.insert("mutation_succeeded".into(), self.mutation_succeeded.to_string());
        facts.insert("queries_run".into(), self.queries_run.to_string());
        if let Some(r) = &self.last_result {
            facts.insert("last_result".into(), r.clone());
        }
        EnvironmentEvidence {
            admissible_actions: Vec::new(),
            schema: Some(SchemaMap::from_tables(&self.tables)),
            no_op_phrases: Vec::new(),
            progress_facts: facts,
        }
    }

    pub fn reference_plan(&self) -> Vec<PlanStep> {
        if self.finished {
            return Vec::new();
        }
        let mutation = self.task.kind == DbTaskKind::Mutation;
        let mut plan = Vec::new();
        if !(mutation && self.mutation_succeeded) {
            for q in &self.task.reference_sql {
                let kind = match sql::parse(q) {
                    Ok(s) if s.is_mutation() => StepKind::Mutation,
                    _ => StepKind::Query,
                };
                plan.push(PlanStep { action: ToolCall::new(EXECUTE_QUERY, &[q]).render(), kind });
            }
        }
        let answer = if mutation { "done" } else { self.task.truth.as_str() };
        plan.push(PlanStep { action: ToolCall::new(COMMIT_ANSWER, &[answer]).render(), kind: StepKind::Commit });
        plan
    }
}

pub fn base_contract() -> Contract {
    let tools = vec![
        ToolSpec::new(EXECUTE_QUERY, "Run one SQL statement (SELECT, INSERT, UPDATE or DELETE) and return its result.", vec![
            ParamSpec::required("query", "sql"),
        ]),
        ToolSpec::new(COMMIT_ANSWER, "Record a final answer and end the episode.", vec![ParamSpec::required(
            "answer", "text",
        )]),
        ToolSpec::new(FINISH, "End the episode.", vec![]),
    ];
    let protocol = ProtocolFacts {
        answer_tool: Some(COMMIT_ANSWER.into()),
        finish_tool: Some(FINISH.into()),
        command_tool: Some(EXECUTE_QUERY.into()),
        precedence: Vec::new(),
    };
    Contract::new(
        crate::task::MINIDB,
        tools,
        vec!["Identifiers containing spaces or reserved words must be quoted with backticks.".into()],
        "Reply with exactly one tool call per turn, e.g. execute_query(\"SELECT 1\").",
        protocol,
    )
    .expect("static contract is valid")
}
