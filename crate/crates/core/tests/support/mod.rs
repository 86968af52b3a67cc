//! Shared oracles for the integration tests.
#![allow(dead_code)]

pub mod corpus;
pub mod rowscan;

use harness_core::env::EnvironmentHandle;
use harness_core::fixtures;
use harness_core::intervention::{Harness, InterventionSet, LayerToggles};
use harness_core::regulation::{regulate, update_tracker, ProgressTracker, RegulateInput};
use harness_core::runtime::EpisodeRecord;
use harness_core::task::{TaskSpec, GRIDHOUSE, MINIDB};
use harness_core::text::tokenize;
use harness_core::trajectory::RegulationSignal;

pub fn all_tasks() -> Vec<TaskSpec> {
    let mut v = fixtures::test_tasks(GRIDHOUSE);
    v.extend(fixtures::test_tasks(MINIDB));
    v.extend(fixtures::train_suite().tasks);
    v
}

pub fn test_tasks() -> Vec<TaskSpec> {
    let mut v = fixtures::test_tasks(GRIDHOUSE);
    v.extend(fixtures::test_tasks(MINIDB));
    v
}

/// Every registry candidate, for the widest set of gates and detectors.
pub fn full_registry_set() -> InterventionSet {
    let mut set = InterventionSet::new("all");
    for i in fixtures::registry() {
        set.push(i).unwrap();
    }
    set.freeze()
}

pub fn compile(set: &InterventionSet) -> Harness {
    Harness::compile(set, LayerToggles::default()).unwrap()
}

/// Replay a logged episode against a fresh environment and recompute each
/// regulation signal from the prefix that ends with that step's observation.
pub fn check_fidelity(rec: &EpisodeRecord, harness: &Harness, budget: usize) -> Result<(), String> {
    let steps = &rec.trajectory.steps;
    let task = &rec.trajectory.task;
    let (mut env, o0) = EnvironmentHandle::init(task, rec.seed).map_err(|e| e.to_string())?;
    if o0 != rec.trajectory.initial_observation {
        return Err("initial observation differs".into());
    }
    if steps.len() > budget {
        return Err(format!("{} steps for budget {budget}", steps.len()));
    }
    let mut tracker = ProgressTracker::default();
    let mut prefix = rec.trajectory.clone();
    prefix.steps.clear();
    for (t, s) in steps.iter().enumerate() {
        let here = format!("step {t}");
        if s.index != t {
            return Err(format!("{here}: index {}", s.index));
        }
        if s.remaining_budget != budget as i64 - t as i64 - 1 {
            return Err(format!("{here}: remaining {}", s.remaining_budget));
        }
        if s.raw_model_output.is_empty() {
            return Err(format!("{here}: no raw output"));
        }
        let d = &s.decision;
        if d.action.is_some() == d.block_message.is_some() {
            return Err(format!("{here}: decision must carry exactly one of action and block message"));
        }
        if d.forced {
            let prev = t.checked_sub(1).map(|p| &steps[p].regulation);
            if prev.and_then(|r| r.suggested_action.as_ref()) != d.action.as_ref() {
                return Err(format!("{here}: forced action was not suggested by the previous signal"));
            }
        }
        let expected_obs = if d.is_block() { d.block_message.clone().unwrap() } else { env.step(d.action.as_ref().unwrap()) };
        if expected_obs != s.observation {
            return Err(format!("{here}: observation does not follow from the decision"));
        }
        let tracked = d.action.clone().filter(|_| !d.is_block()).unwrap_or_else(|| s.raw_model_output.clone());
        let mut step = s.clone();
        step.regulation = RegulationSignal::empty();
        prefix.steps.push(step);
        let evidence = env.evidence();
        update_tracker(&mut tracker, &tracked, &s.observation, &evidence);
        let signal = regulate(
            &harness.regulation,
            &tracker,
            &RegulateInput {
                trajectory: &prefix,
                evidence: &evidence,
                remaining_budget: s.remaining_budget,
                task_type: rec.task_type.as_deref(),
            },
        );
        if signal != s.regulation {
            return Err(format!("{here}: regulation is not a function of the observed prefix"));
        }
        prefix.steps.last_mut().unwrap().regulation = signal;
        if env.is_end() && t + 1 != steps.len() {
            return Err(format!("{here}: episode continued after the environment ended"));
        }
    }
    if !env.is_end() && steps.len() != budget && rec.fault.is_none() {
        return Err("episode stopped early without ending".into());
    }
    if (env.evaluate() - rec.reward).abs() > 0.0 {
        return Err("reward differs on replay".into());
    }
    Ok(())
}

/// For each BLOCK step: the environment as it stood, plus what was blocked.
pub fn blocked_attempts(rec: &EpisodeRecord) -> Vec<(EnvironmentHandle, String)> {
    let (mut env, _) = EnvironmentHandle::init(&rec.trajectory.task, rec.seed).unwrap();
    let mut out = Vec::new();
    for s in &rec.trajectory.steps {
        if s.decision.is_block() {
            let attempted = s.decision.action.clone().unwrap_or_else(|| s.raw_model_output.clone());
            out.push((env.clone(), attempted));
        } else if let Some(a) = &s.decision.action {
            env.step(a);
        }
    }
    out
}

/// Whether running `action` on a copy of `env` fails or does nothing useful.
pub fn blocked_action_is_harmless(env: &EnvironmentHandle, action: &str) -> bool {
    let mut probe = env.clone();
    let before = env.evidence();
    let obs = probe.step(action);
    EnvironmentHandle::is_error_observation(&obs)
        || before.is_no_op(&obs)
        || probe.state == env.state
        || (probe.is_end() && probe.evaluate() == 0.0)
}

/// Final environment after re-executing only the EXEC steps.
pub fn exec_only_replay(rec: &EpisodeRecord) -> EnvironmentHandle {
    let (mut env, _) = EnvironmentHandle::init(&rec.trajectory.task, rec.seed).unwrap();
    for s in rec.trajectory.steps.iter().filter(|s| !s.decision.is_block()) {
        env.step(s.decision.action.as_ref().unwrap());
    }
    env
}

/// Okapi BM25 (k1 1.2, b 0.75, idf ln((N - df + 0.5)/(df + 0.5) + 1)) by
/// direct counting.
pub fn bm25_oracle(query: &str, docs: &[String]) -> Vec<f64> {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d)).collect();
    let n = toks.len() as f64;
    let avg = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let q = tokenize(query);
    toks.iter()
        .map(|d| {
            let mut score = 0.0;
            for term in &q {
                let f = d.iter().filter(|t| *t == term).count() as f64;
                if f == 0.0 {
                    continue;
                }
                let df = toks.iter().filter(|x| x.contains(term)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let norm = if avg > 0.0 { d.len() as f64 / avg } else { 0.0 };
                score += idf * f * 2.2 / (f + 1.2 * (0.25 + 0.75 * norm));
            }
            score
        })
        .collect()
}

const VOCAB: [&str; 12] =
    ["mug", "sink", "clean", "heat", "fridge", "table", "query", "count", "shelf", "towel", "lamp", "order"];

pub struct Corpus {
    pub query: String,
    pub docs: Vec<String>,
}

/// Up to 10 documents of up to 20 tokens each.
pub fn random_corpus(rng: &mut impl rand::Rng) -> Corpus {
    use rand::seq::SliceRandom;
    let n = rng.gen_range(1..=10);
    let mut words = |lo: usize, hi: usize| -> String {
        let len = rng.gen_range(lo..=hi);
        (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let docs = (0..n).map(|_| words(1, 20)).collect();
    Corpus { query: words(1, 5), docs }
}

/// Compare library scores and retrieval order with the oracle on one corpus.
pub fn bm25_agrees(c: &Corpus) -> Result<(), String> {
    use harness_core::skill::{retrieve, Skill, SkillLibrary};
    let skills = c
        .docs
        .iter()
        .enumerate()
        .map(|(i, d)| Skill {
            skill_id: format!("s{i:02}"),
            environment_id: GRIDHOUSE.into(),
            task_type_tags: Vec::new(),
            title: String::new(),
            body: d.clone(),
        })
        .collect();
    let lib = SkillLibrary::new(skills).map_err(|e| e.to_string())?;
    let want = bm25_oracle(&c.query, &c.docs);
    let q = tokenize(&c.query);
    for (i, w) in want.iter().enumerate() {
        let got = lib.score_at(&q, i);
        if (got - w).abs() > 1e-9 {
            return Err(format!("doc {i}: {got} vs {w}"));
        }
    }
    let mut order: Vec<usize> = (0..want.len()).filter(|&i| want[i] > 0.0).collect();
    order.sort_by(|&a, &b| want[b].total_cmp(&want[a]).then(a.cmp(&b)));
    let want_ids: Vec<String> = order.iter().map(|i| format!("s{i:02}")).collect();
    let got: Vec<String> =
        retrieve(&TaskSpec::bare("q", &c.query, GRIDHOUSE), &lib, c.docs.len(), None).into_iter().map(|s| s.skill_id).collect();
    if got != want_ids {
        return Err(format!("order {got:?} vs {want_ids:?}"));
    }
    Ok(())
}

/// Run `n` random queries against the interpreter and the row scan.
/// Returns (successful queries, non-empty results).
pub fn sql_agreement(n: usize, seed: u64) -> Result<(usize, usize), String> {
    use harness_core::env::sql::{self, QueryOutput};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let tables = rowscan::fixture_tables();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut ok, mut nonempty) = (0, 0);
    for _ in 0..n {
        let t = tables.choose(&mut rng).unwrap();
        let q = rowscan::random_query(t, &mut rng);
        let text = rowscan::render(t, &q);
        let got = sql::run(&mut [t.clone()], &text);
        match rowscan::evaluate(t, &q) {
            Ok(want) => {
                if got.as_ref() != Ok(&want) {
                    return Err(format!("{text}: {got:?} vs {want:?}"));
                }
                ok += 1;
                if !matches!(&want, QueryOutput::Rows { rows, .. } if rows.is_empty()) {
                    nonempty += 1;
                }
            }
            Err(()) if got.is_err() => {}
            Err(()) => return Err(format!("{text}: expected an error, got {got:?}")),
        }
    }
    Ok((ok, nonempty))
}
