//! Built-in worlds, task suites and the candidate intervention registry.

pub mod gridhouse;
pub mod minidb;

use std::path::{Path, PathBuf};

use crate::contract::ContractDelta;
use crate::env::gridhouse::{Attribute, Goal};
use crate::env::minidb::COMMIT_ANSWER;
use crate::intervention::{DetectorConfig, Intervention, Layer, LayerToggles, Payload};
use crate::persistence::SuiteConfig;
use crate::policy::{Behavior, PolicyKind, ScriptedConfig};
use crate::realization::{Condition, GateEffect, GateRule, Rewrite, Suggestion};
use crate::regulation::DetectorKind;
use crate::skill::Skill;
use crate::task::{Split, TaskFixture, TaskSpec, TaskSuite, GRIDHOUSE, MINIDB};

pub use minidb::{NULL_BROKEN_TASK, NULL_FIXED_TASK};

/// Id of the registry candidate that fixes one training task and breaks another.
pub const NULL_REWRITE_ID: &str = "gate-minidb-null-zero";

/// Fault families with a designed corrective layer.
pub const CORRECTABLE: [Behavior; 4] =
    [Behavior::FreeText, Behavior::Loop, Behavior::WrongTool, Behavior::PrematureCommit];

/// Layer that corrects each fault family.
pub fn matched_layer(b: Behavior) -> Option<Layer> {
    match b {
        Behavior::FreeText => Some(Layer::ActionGate),
        Behavior::Loop => Some(Layer::Regulation),
        Behavior::WrongTool => Some(Layer::Contract),
        Behavior::PrematureCommit => Some(Layer::Skill),
        Behavior::Oracle | Behavior::FollowHint => None,
    }
}

pub fn test_tasks(env: &str) -> Vec<TaskSpec> {
    match env {
        GRIDHOUSE => gridhouse::test_tasks(),
        MINIDB => minidb::test_tasks(),
        _ => Vec::new(),
    }
}

fn is_transform(t: &TaskSpec) -> bool {
    matches!(&t.fixture, Some(TaskFixture::GridHouse(w)) if w.goal.attribute.is_some())
}

fn is_mutation(t: &TaskSpec) -> bool {
    matches!(&t.fixture, Some(TaskFixture::MiniDb(d)) if d.kind == crate::env::minidb::DbTaskKind::Mutation)
}

/// The ten held-out tasks of one environment that a family suite uses.
pub fn family_tasks(b: Behavior, env: &str) -> Vec<TaskSpec> {
    let all = test_tasks(env);
    let pick = |v: Vec<TaskSpec>, skip: usize| -> Vec<TaskSpec> { v.into_iter().skip(skip).take(10).collect() };
    match (b, env) {
        (Behavior::FreeText, _) => pick(all, 0),
        (Behavior::Loop, GRIDHOUSE) => pick(all, 8),
        (Behavior::Loop, _) => pick(all.into_iter().filter(|t| !is_mutation(t)).collect(), 0),
        (Behavior::WrongTool, GRIDHOUSE) => pick(all.into_iter().filter(is_transform).collect(), 0),
        (Behavior::WrongTool, _) => pick(all, 14),
        (Behavior::PrematureCommit, GRIDHOUSE) => pick(all.into_iter().filter(is_transform).collect(), 2),
        (Behavior::PrematureCommit, _) => pick(all.into_iter().filter(is_mutation).collect(), 0),
        _ => all,
    }
}

pub fn family_suite(b: Behavior, env: &str) -> TaskSuite {
    TaskSuite { suite_id: format!("{}-{env}", b.name()), split: Split::Test, tasks: family_tasks(b, env) }
}

pub fn test_suite(env: &str) -> TaskSuite {
    TaskSuite { suite_id: format!("{env}-test"), split: Split::Test, tasks: test_tasks(env) }
}

/// Training tasks of both environments.
pub fn train_suite() -> TaskSuite {
    let mut tasks = gridhouse::train_tasks();
    tasks.extend(minidb::train_tasks());
    TaskSuite { suite_id: "train".into(), split: Split::Train, tasks }
}

fn contract(id: &str, env: &str, tool: &str, text: &str) -> Intervention {
    Intervention {
        intervention_id: id.into(),
        layer: Layer::Contract,
        provenance: "contract mismatch on training tasks".into(),
        payload: Payload::Contract(ContractDelta {
            delta_id: id.into(),
            environment_id: env.into(),
            tool_amendments: [(tool.to_string(), text.to_string())].into_iter().collect(),
            ..Default::default()
        }),
    }
}

fn skill(id: &str, env: &str, tag: &str, title: &str, body: &str) -> Intervention {
    Intervention {
        intervention_id: id.into(),
        layer: Layer::Skill,
        provenance: "residual reasoning on training tasks".into(),
        payload: Payload::Skill(Skill {
            skill_id: id.into(),
            environment_id: env.into(),
            task_type_tags: vec![tag.into()],
            title: title.into(),
            body: body.into(),
        }),
    }
}

fn gate(id: &str, env: &str, trigger: Condition, effect: GateEffect) -> Intervention {
    Intervention {
        intervention_id: id.into(),
        layer: Layer::ActionGate,
        provenance: "action realization on training tasks".into(),
        payload: Payload::Gate(GateRule { rule_id: id.into(), environment_id: env.into(), trigger, effect }),
    }
}

fn rewrite(id: &str, env: &str, rewrite: Rewrite) -> Intervention {
    gate(id, env, Condition::Always, GateEffect::Canonicalize { rewrite })
}

fn detector(id: &str, kind: DetectorKind) -> Intervention {
    Intervention {
        intervention_id: id.into(),
        layer: Layer::Regulation,
        provenance: "trajectory degeneration on training tasks".into(),
        payload: Payload::Detector(DetectorConfig { detector: kind, threshold: None }),
    }
}

/// Candidate interventions in registry order.
pub fn registry() -> Vec<Intervention> {
    vec![
        contract(
            "contract-gridhouse-take-first",
            GRIDHOUSE,
            "take",
            "Pick up the object before cleaning, heating or cooling it.",
        ),
        contract(
            "contract-minidb-answer-tool",
            MINIDB,
            COMMIT_ANSWER,
            "Always submit answers with commit_final_answer; finish() records no answer.",
        ),
        skill(
            "skill-clean",
            GRIDHOUSE,
            "clean",
            "Cleaning an object",
            "Take the object first, carry it to a sinkbasin and clean it there. Only then go to the destination and place it.",
        ),
        skill(
            "skill-heat",
            GRIDHOUSE,
            "heat",
            "Heating an object",
            "Take the object first, carry it to a microwave and heat it there so it is hot. Only then go to the destination and place it.",
        ),
        skill(
            "skill-cool",
            GRIDHOUSE,
            "cool",
            "Cooling an object",
            "Take the object first, carry it to a fridge and cool it there. Only then go to the destination and place it.",
        ),
        skill(
            "skill-mutation",
            MINIDB,
            "mutation",
            "Tasks that change data",
            "A mutation task (insert, add, update, set, change, delete, remove) is solved by running the statement with execute_query. Commit only after the change reports affected rows.",
        ),
        rewrite(
            NULL_REWRITE_ID,
            MINIDB,
            Rewrite::ReplaceArg { tool: COMMIT_ANSWER.into(), arg: "answer".into(), from: "NULL".into(), to: "0".into() },
        ),
        rewrite("gate-minidb-tool-call-rescue", MINIDB, Rewrite::ToolCallRescue),
        rewrite("gate-gridhouse-fuzzy", GRIDHOUSE, Rewrite::FuzzyAdmissible),
        rewrite("gate-minidb-backticks", MINIDB, Rewrite::BacktickRepair),
        gate(
            "gate-gridhouse-prose",
            GRIDHOUSE,
            Condition::eq("parsed", "false"),
            GateEffect::Block { message: "that is not an executable action.{hint}".into(), suggest: Some(Suggestion::FromProse) },
        ),
        gate(
            "gate-minidb-prose",
            MINIDB,
            Condition::eq("parsed", "false"),
            GateEffect::Block {
                message: "no tool call found. Valid tools: {tools}.{hint}".into(),
                suggest: Some(Suggestion::FromProse),
            },
        ),
        gate(
            "gate-gridhouse-inadmissible",
            GRIDHOUSE,
            Condition::All(vec![Condition::eq("parsed", "true"), Condition::eq("admissible", "false")]),
            GateEffect::Block { message: "that action is not possible here.".into(), suggest: None },
        ),
        gate(
            "gate-minidb-commit-order",
            MINIDB,
            Condition::All(vec![
                Condition::eq("task_type", "mutation"),
                Condition::eq("tool", COMMIT_ANSWER),
                Condition::eq("fact.mutation_succeeded", "false"),
            ]),
            GateEffect::Block { message: "nothing has been changed yet; run the change first.".into(), suggest: None },
        ),
        detector("detector-repetition", DetectorKind::Repetition),
        detector("detector-no-progress", DetectorKind::NoProgress),
        detector("detector-oscillation", DetectorKind::Oscillation),
        detector("detector-budget", DetectorKind::Budget),
    ]
}

/// Skills carried by the registry.
pub fn registry_skills() -> Vec<Skill> {
    registry()
        .into_iter()
        .filter_map(|i| match i.payload {
            Payload::Skill(s) => Some(s),
            _ => None,
        })
        .collect()
}

fn scripted(b: Behavior) -> PolicyKind {
    PolicyKind::Scripted(ScriptedConfig::new(b))
}

fn config(env: &str, tasks: &str, split: Split, b: Behavior, set: &str, log: &str) -> SuiteConfig {
    SuiteConfig {
        environment_id: env.into(),
        tasks: PathBuf::from(tasks),
        split,
        policy: scripted(b),
        intervention_set: set.into(),
        budget: None,
        runs: 1,
        seed: 0,
        layers: LayerToggles::default(),
        log: Some(PathBuf::from(log)),
    }
}

/// File name of the set `evolve` writes next to the training config.
pub const EVOLVED_SET_FILE: &str = "evolved-set.json";

fn write(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)
}

fn suite_json(s: &TaskSuite) -> String {
    serde_json::to_string_pretty(s).expect("suites serialize")
}

/// Write suites, registry, skills and ready-made configs under `dir`.
pub fn export(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |rel: String, text: String| -> std::io::Result<()> {
        let p = dir.join(rel);
        write(&p, &text)?;
        written.push(p);
        Ok(())
    };
    put("suites/train.json".into(), suite_json(&train_suite()))?;
    for env in [GRIDHOUSE, MINIDB] {
        put(format!("suites/{env}-test.json"), suite_json(&test_suite(env)))?;
        for b in CORRECTABLE {
            put(format!("suites/{}-{env}.json", b.name()), suite_json(&family_suite(b, env)))?;
        }
    }
    for (n, i) in registry().iter().enumerate() {
        put(format!("registry/{:02}-{}.toml", n + 1, i.intervention_id), i.to_toml())?;
    }
    for s in registry_skills() {
        put(format!("skills/{}.md", s.skill_id), s.to_document())?;
    }
    let train = config("any", "../suites/train.json", Split::Train, Behavior::FollowHint, "none", "../logs/train.jsonl");
    put("configs/train.toml".into(), train.to_toml())?;
    for env in [GRIDHOUSE, MINIDB] {
        let oracle = config(env, &format!("../suites/{env}-test.json"), Split::Test, Behavior::Oracle, "none", &format!("../logs/oracle-{env}.jsonl"));
        put(format!("configs/oracle-{env}.toml"), oracle.to_toml())?;
        for b in CORRECTABLE {
            let suite = format!("../suites/{}-{env}.json", b.name());
            let base = config(env, &suite, Split::Test, b, "none", &format!("../logs/{}-{env}-base.jsonl", b.name()));
            put(format!("configs/{}-{env}-base.toml", b.name()), base.to_toml())?;
            let full = config(env, &suite, Split::Test, b, EVOLVED_SET_FILE, &format!("../logs/{}-{env}-evolved.jsonl", b.name()));
            put(format!("configs/{}-{env}-evolved.toml", b.name()), full.to_toml())?;
        }
    }
    Ok(written)
}

/// Goal of a GridHouse task, for tests and reports.
pub fn goal_of(task: &TaskSpec) -> Option<&Goal> {
    match &task.fixture {
        Some(TaskFixture::GridHouse(w)) => Some(&w.goal),
        _ => None,
    }
}

/// Verb a transform goal needs, if any.
pub fn transform_verb(task: &TaskSpec) -> Option<&'static str> {
    goal_of(task).and_then(|g| g.attribute).map(Attribute::verb)
}
