//! JSONL episode logs and suite configuration files.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervention::{InterventionSet, LayerToggles};
use crate::policy::{PolicyHandle, PolicyKind};
use crate::runtime::EpisodeRecord;
use crate::task::{Split, TaskSuite};
use crate::text::short_digest;
use crate::trajectory::{Outcome, StepRecord};

pub const SCHEMA_VERSION: u32 = 1;
/// Suffix of the companion index written next to every log.
pub const INDEX_SUFFIX: &str = ".index";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { path: String, found: u64 },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("config {path}: {reason}")]
    Config { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One line of the episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub schema_version: u32,
    pub episode_id: String,
    pub task_id: String,
    pub environment_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<String>,
    pub run_index: usize,
    pub policy_id: String,
    pub intervention_set_id: String,
    pub intervention_set_version: u32,
    pub seed: u64,
    pub outcome: Outcome,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub steps: Vec<StepRecord>,
}

pub fn episode_id(task_id: &str, run_index: usize, seed: u64) -> String {
    short_digest(&[task_id, &run_index.to_string(), &seed.to_string()])
}

impl LogRecord {
    pub fn from_episode(ep: &EpisodeRecord) -> Self {
        let task = &ep.trajectory.task;
        Self {
            schema_version: SCHEMA_VERSION,
            episode_id: episode_id(&task.task_id, ep.run_index, ep.seed),
            task_id: task.task_id.clone(),
            environment_id: task.environment_id.clone(),
            task_type: ep.task_type.clone(),
            run_index: ep.run_index,
            policy_id: ep.policy_id.clone(),
            intervention_set_id: ep.set_id.clone(),
            intervention_set_version: ep.set_version,
            seed: ep.seed,
            outcome: ep.outcome,
            reward: ep.reward,
            fault: ep.fault.clone(),
            steps: ep.trajectory.steps.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }

    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Success
    }

    fn sort_key(&self) -> (String, String, usize, u64) {
        (self.policy_id.clone(), self.task_id.clone(), self.run_index, self.seed)
    }
}

/// Single appending writer; records land in completion order.
pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self, PersistError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let f = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(f) })
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), PersistError> {
        writeln!(self.out, "{}", record.to_line())?;
        Ok(())
    }

    /// Flush and write the sorted companion index.
    pub fn finish(mut self) -> Result<PathBuf, PersistError> {
        self.out.flush()?;
        drop(self.out);
        write_index(&self.path)?;
        Ok(self.path)
    }
}

pub fn index_path(log: &Path) -> PathBuf {
    let mut s = log.as_os_str().to_owned();
    s.push(INDEX_SUFFIX);
    PathBuf::from(s)
}

/// Index lines `episode_id<TAB>line_number`, sorted by policy, task, run, seed.
pub fn write_index(log: &Path) -> Result<(), PersistError> {
    let records = read_log(log)?;
    let mut keyed: Vec<_> = records.iter().enumerate().map(|(i, r)| (r.sort_key(), r.episode_id.clone(), i)).collect();
    keyed.sort();
    let mut out = String::new();
    for (_, id, line) in keyed {
        out.push_str(&format!("{id}\t{line}\n"));
    }
    std::fs::write(index_path(log), out)?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, PersistError> {
    let p = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| PersistError::Malformed { path: p.clone(), line: i + 1, reason };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let found = value.get("schema_version").and_then(serde_json::Value::as_u64).unwrap_or(0);
        if found != u64::from(SCHEMA_VERSION) {
            return Err(PersistError::SchemaVersion { path: p.clone(), found });
        }
        out.push(serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?);
    }
    Ok(out)
}

/// Records in index order; falls back to sorting when no index exists.
pub fn read_sorted(path: &Path) -> Result<Vec<LogRecord>, PersistError> {
    let records = read_log(path)?;
    let idx = index_path(path);
    if !idx.exists() {
        let mut r = records;
        r.sort_by_key(LogRecord::sort_key);
        return Ok(r);
    }
    let text = std::fs::read_to_string(&idx)?;
    let mut out = Vec::with_capacity(records.len());
    for (i, line) in text.lines().enumerate() {
        let n: usize = line
            .split('\t')
            .nth(1)
            .and_then(|s| s.parse().ok())
            .filter(|&n| n < records.len())
            .ok_or_else(|| PersistError::Malformed {
                path: idx.display().to_string(),
                line: i + 1,
                reason: "bad index line".into(),
            })?;
        out.push(records[n].clone());
    }
    Ok(out)
}

/// The log re-serialized in sorted order; the unit of byte comparison.
pub fn sorted_log_bytes(path: &Path) -> Result<Vec<u8>, PersistError> {
    let mut out = Vec::new();
    for r in read_sorted(path)? {
        out.extend_from_slice(r.to_line().as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

fn default_runs() -> usize {
    1
}

/// `environment_id` value that admits manifests spanning environments.
pub const ANY_ENVIRONMENT: &str = "any";

/// A suite run description, stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub environment_id: String,
    /// Task manifest (a `TaskSuite` JSON file).
    pub tasks: PathBuf,
    pub split: Split,
    pub policy: PolicyKind,
    /// Intervention set JSON, or `none`.
    #[serde(default = "none_path")]
    pub intervention_set: String,
    /// Step budget; each environment's default when absent.
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub layers: LayerToggles,
    /// Log destination; defaults to the config path with a `.jsonl` extension.
    #[serde(default)]
    pub log: Option<PathBuf>,
}

fn none_path() -> String {
    "none".into()
}

/// A config with every path resolved and every file loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SuiteConfig,
    pub suite: TaskSuite,
    pub set: InterventionSet,
    pub policy: PolicyHandle,
    pub log_path: PathBuf,
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Read, resolve relative paths against the config's directory, load
    /// the manifest and set, and enforce split hygiene.
    pub fn load(path: &Path) -> Result<LoadedConfig, PersistError> {
        let p = path.display().to_string();
        let err = |reason: String| PersistError::Config { path: p.clone(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let config = SuiteConfig::from_toml(&text).map_err(err)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let log_path = config.log.as_ref().map_or_else(|| path.with_extension("jsonl"), |l| base.join(l));
        config.resolve(base, log_path).map_err(err)
    }

    pub fn resolve(self, base: &Path, log_path: PathBuf) -> Result<LoadedConfig, String> {
        if self.runs == 0 {
            return Err("runs must be at least 1".into());
        }
        let manifest = base.join(&self.tasks);
        let text = std::fs::read_to_string(&manifest).map_err(|e| format!("{}: {e}", manifest.display()))?;
        let suite: TaskSuite = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", manifest.display()))?;
        suite.validate()?;
        if suite.split != self.split {
            return Err(format!("config split {:?} does not match manifest split {:?}", self.split, suite.split));
        }
        let any = self.environment_id == ANY_ENVIRONMENT;
        if let Some(t) = suite.tasks.iter().find(|t| !any && t.environment_id != self.environment_id) {
            return Err(format!("task `{}` belongs to `{}`", t.task_id, t.environment_id));
        }
        let set = if self.intervention_set == "none" {
            InterventionSet::new("none").freeze()
        } else {
            let sp = base.join(&self.intervention_set);
            let text = std::fs::read_to_string(&sp).map_err(|e| format!("{}: {e}", sp.display()))?;
            InterventionSet::from_json(&text).map_err(|e| format!("{}: {e}", sp.display()))?
        };
        if self.split == Split::Test && !set.frozen {
            return Err(format!("intervention set `{}` is not frozen; test runs need a frozen set", set.set_id));
        }
        let policy = match &self.policy {
            PolicyKind::Scripted(c) => PolicyHandle::scripted_with(c.clone()),
            PolicyKind::Remote(_) => PolicyHandle {
                policy_id: format!("remote:{}", std::env::var(crate::policy::ENV_MODEL).unwrap_or_default()),
                kind: self.policy.clone(),
            },
        };
        Ok(LoadedConfig { config: self, suite, set, policy, log_path })
    }
}

/// Outcome counts per key, used by summaries.
pub fn outcome_counts(records: &[LogRecord]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry(format!("{:?}", r.outcome)).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{RealizationDecision, RegulationSignal};

    fn record(task: &str, run: usize) -> LogRecord {
        LogRecord {
            schema_version: SCHEMA_VERSION,
            episode_id: episode_id(task, run, 3),
            task_id: task.into(),
            environment_id: "minidb".into(),
            task_type: Some("select".into()),
            run_index: run,
            policy_id: "scripted:oracle".into(),
            intervention_set_id: "none".into(),
            intervention_set_version: 0,
            seed: 3,
            outcome: Outcome::Success,
            reward: 1.0,
            fault: None,
            steps: vec![StepRecord {
                index: 0,
                raw_model_output: "finish()".into(),
                decision: RealizationDecision::exec("finish()"),
                observation: "Episode finished.".into(),
                regulation: RegulationSignal::empty(),
                remaining_budget: 14,
            }],
        }
    }

    #[test]
    fn roundtrip_and_sorted_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut w = LogWriter::create(&path).unwrap();
        for (t, r) in [("b", 1), ("a", 0), ("b", 0)] {
            w.append(&record(t, r)).unwrap();
        }
        w.finish().unwrap();
        let all = read_log(&path).unwrap();
        assert_eq!(all[0], record("b", 1));
        let sorted: Vec<_> = read_sorted(&path).unwrap().into_iter().map(|r| (r.task_id, r.run_index)).collect();
        assert_eq!(sorted, [("a".to_string(), 0), ("b".into(), 0), ("b".into(), 1)]);
    }

    #[test]
    fn unknown_schema_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut r = record("a", 0);
        r.schema_version = 9;
        std::fs::write(&path, format!("{}\n", r.to_line())).unwrap();
        let e = read_log(&path).unwrap_err();
        assert!(matches!(e, PersistError::SchemaVersion { found: 9, .. }), "{e}");
    }

    #[test]
    fn episode_ids_are_stable() {
        assert_eq!(episode_id("t", 0, 1), episode_id("t", 0, 1));
        assert_ne!(episode_id("t", 0, 1), episode_id("t", 1, 1));
    }

    #[test]
    fn config_toml_defaults() {
        let c = SuiteConfig::from_toml(
            "environment_id = \"minidb\"\ntasks = \"t.json\"\nsplit = \"test\"\n[policy]\nkind = \"scripted\"\nbehavior = \"oracle\"\n",
        )
        .unwrap();
        assert_eq!(c.intervention_set, "none");
        assert_eq!(c.runs, 1);
        assert_eq!(c.layers, LayerToggles::default());
        assert_eq!(SuiteConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
