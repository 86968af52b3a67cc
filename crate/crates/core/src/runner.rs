//! Suite execution on a worker pool.

use std::path::PathBuf;
use std::sync::mpsc;

use rayon::prelude::*;

use std::collections::BTreeMap;

use crate::contract::Contract;
use crate::env::base_contract;
use crate::intervention::{Harness, InterventionError, LayerToggles};
use crate::persistence::{LoadedConfig, LogRecord, LogWriter, PersistError};
use crate::policy::PolicyHandle;
use crate::runtime::{default_budget, run_episode, EpisodeParams, EpisodeRecord, RuntimeError};
use crate::task::TaskSpec;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Intervention(#[from] InterventionError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// Seed of run `run_index` under a suite seed.
pub fn episode_seed(seed: u64, run_index: usize) -> u64 {
    seed.wrapping_add(run_index as u64)
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteParams {
    /// Step budget; `None` uses each environment's default.
    pub budget: Option<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl SuiteParams {
    pub fn new(runs: usize, seed: u64) -> Self {
        Self { budget: None, runs, seed }
    }

    fn episode(&self, task: &TaskSpec, run_index: usize) -> EpisodeParams {
        EpisodeParams {
            budget: self.budget.unwrap_or_else(|| default_budget(&task.environment_id)),
            seed: episode_seed(self.seed, run_index),
            run_index,
        }
    }
}

/// Base contracts for every environment the tasks touch.
fn contracts(tasks: &[TaskSpec]) -> Result<BTreeMap<String, Contract>, RuntimeError> {
    let mut m = BTreeMap::new();
    for t in tasks {
        if !m.contains_key(&t.environment_id) {
            m.insert(t.environment_id.clone(), base_contract(&t.environment_id)?);
        }
    }
    Ok(m)
}

fn jobs(tasks: &[TaskSpec], runs: usize) -> Vec<(&TaskSpec, usize)> {
    tasks.iter().flat_map(|t| (0..runs).map(move |r| (t, r))).collect()
}

/// Run every task `runs` times. Results come back in task-major order.
pub fn run_suite(
    tasks: &[TaskSpec],
    harness: &Harness,
    policy: &PolicyHandle,
    p: SuiteParams,
) -> Result<Vec<EpisodeRecord>, RuntimeError> {
    let bases = contracts(tasks)?;
    jobs(tasks, p.runs)
        .into_par_iter()
        .map(|(t, r)| run_episode(t, &bases[&t.environment_id], harness, policy, p.episode(t, r)))
        .collect()
}

/// Execute a loaded config and write its log. Episodes finish in any order;
/// a single writer appends them as they arrive.
pub fn run_config(cfg: &LoadedConfig, extra_off: LayerToggles) -> Result<PathBuf, RunError> {
    let toggles = LayerToggles {
        contract: cfg.config.layers.contract && extra_off.contract,
        skill: cfg.config.layers.skill && extra_off.skill,
        action: cfg.config.layers.action && extra_off.action,
        regulation: cfg.config.layers.regulation && extra_off.regulation,
    };
    let harness = Harness::compile(&cfg.set, toggles)?;
    let bases = contracts(&cfg.suite.tasks)?;
    let mut writer = LogWriter::create(&cfg.log_path)?;
    let p = SuiteParams { budget: cfg.config.budget, runs: cfg.config.runs, seed: cfg.config.seed };
    let (tx, rx) = mpsc::channel::<LogRecord>();
    let work = jobs(&cfg.suite.tasks, p.runs);
    std::thread::scope(|s| -> Result<(), RunError> {
        let handle = s.spawn(move || -> Result<(), PersistError> {
            for rec in rx {
                writer.append(&rec)?;
            }
            writer.finish().map(|_| ())
        });
        let r: Result<(), RuntimeError> = work.into_par_iter().try_for_each_with(tx, |tx, (t, run)| {
            let ep = run_episode(t, &bases[&t.environment_id], &harness, &cfg.policy, p.episode(t, run))?;
            let _ = tx.send(LogRecord::from_episode(&ep));
            Ok(())
        });
        let w = handle.join().expect("writer thread");
        r?;
        Ok(w?)
    })?;
    Ok(cfg.log_path.clone())
}
