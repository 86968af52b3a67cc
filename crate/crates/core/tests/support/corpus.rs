//! Failed episodes labeled by hand with the category a reader would assign.

use harness_core::diagnosis::FailureCategory::{self, *};
use harness_core::persistence::{LogRecord, SCHEMA_VERSION};
use harness_core::task::{GRIDHOUSE, MINIDB};
use harness_core::trajectory::{Outcome, RealizationDecision, RegulationSignal, StepRecord};

pub struct Labeled {
    pub name: &'static str,
    pub record: LogRecord,
    pub label: FailureCategory,
    /// A realization fault hidden under budget exhaustion.
    pub masking: bool,
}

enum S<'a> {
    /// Executed; raw output equals the action.
    X(&'a str, &'a str),
    /// Blocked raw output with its message.
    B(&'a str, &'a str),
}

fn record(env: &str, task_type: Option<&str>, outcome: Outcome, budget: usize, steps: &[S<'_>]) -> LogRecord {
    let steps = steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (raw, decision, obs) = match s {
                S::X(a, o) => (a.to_string(), RealizationDecision::exec(*a), o.to_string()),
                S::B(r, m) => (r.to_string(), RealizationDecision::block(*m), m.to_string()),
            };
            StepRecord {
                index: i,
                raw_model_output: raw,
                decision,
                observation: obs,
                regulation: RegulationSignal::empty(),
                remaining_budget: budget as i64 - i as i64 - 1,
            }
        })
        .collect();
    LogRecord {
        schema_version: SCHEMA_VERSION,
        episode_id: "e".into(),
        task_id: "t".into(),
        environment_id: env.into(),
        task_type: task_type.map(str::to_string),
        run_index: 0,
        policy_id: "hand".into(),
        intervention_set_id: "none".into(),
        intervention_set_version: 0,
        seed: 0,
        outcome,
        reward: 0.0,
        fault: None,
        steps,
    }
}

const NH: &str = "Nothing happens.";

pub fn corpus() -> Vec<Labeled> {
    use Outcome::*;
    use S::*;
    let l = |name, record, label| Labeled { name, record, label, masking: false };
    let mut v = vec![
        l(
            "sql keyword misspelled",
            record(MINIDB, Some("count"), Failure, 15, &[
                X("execute_query(\"SELEC COUNT(*) FROM items\")", "Error: unexpected token 'SELEC'"),
                X("commit_final_answer(\"4\")", "Answer submitted."),
            ]),
            ActionRealization,
        ),
        l(
            "unknown tool name",
            record(MINIDB, Some("select"), Failure, 15, &[
                X("run_sql(\"SELECT name FROM items\")", "Error: unknown tool run_sql."),
                X("commit_final_answer(\"lamp\")", "Answer submitted."),
            ]),
            ActionRealization,
        ),
        l(
            "household prose instead of commands",
            record(GRIDHOUSE, Some("pick"), BudgetExhausted, 3, &[
                X("go to desk 1", "You arrive at desk 1. On it you see a book 1."),
                X("I would now pick up the book.", NH),
                X("take book 1 from desk 1", "You pick up the book 1 from the desk 1."),
            ]),
            ActionRealization,
        ),
        l(
            "finish instead of the answer tool",
            record(MINIDB, Some("aggregate"), EnvironmentTerminated, 15, &[
                X("execute_query(\"SELECT SUM(units) FROM sales\")", "42"),
                X("finish()", "Episode finished."),
            ]),
            ContractMismatch,
        ),
        l(
            "commit before the change",
            record(MINIDB, Some("mutation"), Failure, 15, &[
                X("execute_query(\"SELECT * FROM orders\")", "(1, open), (2, shipped)"),
                X("commit_final_answer(\"done\")", "Answer submitted."),
            ]),
            ContractMismatch,
        ),
        l(
            "sentence as the answer",
            record(MINIDB, Some("count"), Failure, 15, &[
                X("execute_query(\"SELECT COUNT(*) FROM items\")", "3"),
                X("commit_final_answer(\"The answer is 3\")", "Answer submitted."),
            ]),
            ContractMismatch,
        ),
        l(
            "clean without taking",
            record(GRIDHOUSE, Some("clean"), BudgetExhausted, 4, &[
                X("go to countertop 1", "You arrive at countertop 1. On it you see a mug 1."),
                X("go to sinkbasin 1", "You arrive at sinkbasin 1. On it you see nothing."),
                X("clean mug 1 with sinkbasin 1", NH),
                X("go to cabinet 1", "You arrive at cabinet 1. It is closed."),
            ]),
            ContractMismatch,
        ),
        l(
            "looking around until the budget runs out",
            record(GRIDHOUSE, Some("pick"), BudgetExhausted, 4, &[
                X("go to shelf 1", "You arrive at shelf 1. On it you see a cup 1."),
                X("look", "You are in the kitchen. You see shelf 1, sinkbasin 1."),
                X("look", "You are in the kitchen. You see shelf 1, sinkbasin 1."),
                X("look", "You are in the kitchen. You see shelf 1, sinkbasin 1."),
            ]),
            TrajectoryDegeneration,
        ),
        l(
            "pacing between two places",
            record(GRIDHOUSE, Some("pick"), BudgetExhausted, 4, &[
                X("go to shelf 1", "You arrive at shelf 1. On it you see nothing."),
                X("go to desk 1", "You arrive at desk 1. On it you see nothing."),
                X("go to shelf 1", "You arrive at shelf 1. On it you see nothing."),
                X("go to desk 1", "You arrive at desk 1. On it you see nothing."),
            ]),
            TrajectoryDegeneration,
        ),
        l(
            "three moves that change nothing",
            record(GRIDHOUSE, Some("pick"), BudgetExhausted, 3, &[
                X("open shelf 1", NH),
                X("close shelf 1", NH),
                X("take apple 1 from shelf 1", NH),
            ]),
            TrajectoryDegeneration,
        ),
        l(
            "same query rerun then a wrong answer",
            record(MINIDB, Some("select"), Failure, 15, &[
                X("execute_query(\"SELECT name FROM items WHERE price > 5\")", "lamp"),
                X("execute_query(\"SELECT name FROM items WHERE price > 5\")", "lamp"),
                X("commit_final_answer(\"desk\")", "Answer submitted."),
            ]),
            TrajectoryDegeneration,
        ),
        l(
            "wrong value read off a correct query",
            record(MINIDB, Some("count"), Failure, 15, &[
                X("execute_query(\"SELECT COUNT(*) FROM items WHERE stock = 0\")", "2"),
                X("commit_final_answer(\"3\")", "Answer submitted."),
            ]),
            ResidualReasoning,
        ),
        l(
            "wrong row changed",
            record(MINIDB, Some("mutation"), Failure, 15, &[
                X("execute_query(\"UPDATE orders SET status = 'shipped' WHERE id = 3\")", "Query OK, 1 row affected."),
                X("commit_final_answer(\"done\")", "Answer submitted."),
            ]),
            ResidualReasoning,
        ),
        l(
            "wrong object delivered",
            record(GRIDHOUSE, Some("pick"), BudgetExhausted, 4, &[
                X("go to desk 1", "You arrive at desk 1. On it you see a pen 1, a book 1."),
                X("take pen 1 from desk 1", "You pick up the pen 1 from the desk 1."),
                X("go to shelf 1", "You arrive at shelf 1. On it you see nothing."),
                X("put pen 1 in/on shelf 1", "You put the pen 1 in/on the shelf 1."),
            ]),
            ResidualReasoning,
        ),
    ];
    let prose = "I think the next step is to go to countertop 1.";
    let msg = "[BLOCKED] that is not an executable action.";
    v.push(Labeled {
        name: "prose blocked until the budget runs out",
        record: record(GRIDHOUSE, Some("clean"), BudgetExhausted, 4, &[B(prose, msg), B(prose, msg), B(prose, msg), B(prose, msg)]),
        label: ActionRealization,
        masking: true,
    });
    v.push(Labeled {
        name: "unparsable query repeated until the budget runs out",
        record: record(MINIDB, Some("count"), BudgetExhausted, 3, &[
            X("The query I need is: SELECT COUNT(*) FROM items", "Error: no tool call found. Reply with exactly one tool call."),
            X("The query I need is: SELECT COUNT(*) FROM items", "Error: no tool call found. Reply with exactly one tool call."),
            X("The query I need is: SELECT COUNT(*) FROM items", "Error: no tool call found. Reply with exactly one tool call."),
        ]),
        label: ActionRealization,
        masking: true,
    });
    v
}
