//! Pass@1, Pass^k and relative gain over repeated runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persistence::LogRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("run matrix is empty")]
    EmptyMatrix,
    #[error("task `{task}` has {found} runs, expected {expected}")]
    KMismatch { task: String, expected: usize, found: usize },
    #[error("baseline is zero; report the absolute delta instead")]
    ZeroBaseline,
}

/// Binary outcomes per task, `K` runs each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMatrix {
    pub runs: BTreeMap<String, Vec<bool>>,
}

impl RunMatrix {
    pub fn from_rows<S: AsRef<str>>(rows: &[(S, Vec<bool>)]) -> Result<Self, MetricsError> {
        let m = Self { runs: rows.iter().map(|(t, r)| (t.as_ref().to_string(), r.clone())).collect() };
        m.k()?;
        Ok(m)
    }

    /// Rows ordered by run index; success means reward exactly 1.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> Result<Self, MetricsError> {
        let mut cells: BTreeMap<String, BTreeMap<usize, bool>> = BTreeMap::new();
        for r in records {
            cells.entry(r.task_id.clone()).or_default().insert(r.run_index, r.reward == 1.0);
        }
        let m = Self { runs: cells.into_iter().map(|(t, c)| (t, c.into_values().collect())).collect() };
        m.k()?;
        Ok(m)
    }

    /// Shared run count; errors when rows disagree or the matrix is empty.
    pub fn k(&self) -> Result<usize, MetricsError> {
        let mut it = self.runs.iter();
        let (_, first) = it.next().ok_or(MetricsError::EmptyMatrix)?;
        let k = first.len();
        if k == 0 {
            return Err(MetricsError::EmptyMatrix);
        }
        for (task, r) in it {
            if r.len() != k {
                return Err(MetricsError::KMismatch { task: task.clone(), expected: k, found: r.len() });
            }
        }
        Ok(k)
    }
}

/// Mean over all task-run cells.
pub fn pass_at_1(m: &RunMatrix) -> Result<f64, MetricsError> {
    let k = m.k()?;
    let wins: usize = m.runs.values().map(|r| r.iter().filter(|&&x| x).count()).sum();
    Ok(wins as f64 / (k * m.runs.len()) as f64)
}

/// Fraction of tasks whose `k` runs all succeed.
pub fn pass_hat_k(m: &RunMatrix, k: usize) -> Result<f64, MetricsError> {
    let kk = m.k()?;
    if k != kk {
        return Err(MetricsError::KMismatch { task: "*".into(), expected: kk, found: k });
    }
    let all = m.runs.values().filter(|r| r.iter().all(|&x| x)).count();
    Ok(all as f64 / m.runs.len() as f64)
}

/// Fraction of tasks with at least one success among `k` runs.
pub fn pass_at_k(m: &RunMatrix, k: usize) -> Result<f64, MetricsError> {
    let kk = m.k()?;
    if k != kk {
        return Err(MetricsError::KMismatch { task: "*".into(), expected: kk, found: k });
    }
    let any = m.runs.values().filter(|r| r.iter().any(|&x| x)).count();
    Ok(any as f64 / m.runs.len() as f64)
}

pub fn relative_gain(before: f64, after: f64) -> Result<f64, MetricsError> {
    if before == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((after - before) / before)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub environment_id: String,
    pub policy_id: String,
    pub tasks: usize,
    pub k: usize,
    pub pass_at_1: f64,
    pub pass_hat_k: f64,
    pub pass_at_k: f64,
}

/// Per-environment, per-policy breakdown of a log.
pub fn report(records: &[LogRecord]) -> Result<Vec<MetricsRow>, MetricsError> {
    let mut groups: BTreeMap<(String, String), Vec<&LogRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.environment_id.clone(), r.policy_id.clone())).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(MetricsError::EmptyMatrix);
    }
    groups
        .into_iter()
        .map(|((env, policy), rs)| {
            let m = RunMatrix::from_records(rs)?;
            let k = m.k()?;
            Ok(MetricsRow {
                environment_id: env,
                policy_id: policy,
                tasks: m.runs.len(),
                k,
                pass_at_1: pass_at_1(&m)?,
                pass_hat_k: pass_hat_k(&m, k)?,
                pass_at_k: pass_at_k(&m, k)?,
            })
        })
        .collect()
}

pub fn render_report(rows: &[MetricsRow]) -> String {
    let mut out = format!(
        "{:<10} {:<32} {:>5} {:>3} {:>8} {:>8} {:>8}\n",
        "env", "policy", "tasks", "K", "Pass@1", "Pass^K", "Pass@K"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:<32} {:>5} {:>3} {:>8.4} {:>8.4} {:>8.4}",
            r.environment_id, r.policy_id, r.tasks, r.k, r.pass_at_1, r.pass_hat_k, r.pass_at_k
        );
    }
    out
}
