//! Procedural skill memory with Okapi BM25 retrieval.
//!
//! Skills are indexed on title + body. Retrieval is restricted to the task's
//! environment, optionally narrowed to skills tagged with the task type
//! parsed from the instruction, and never returns zero-score skills.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::TaskSpec;
use crate::text::tokenize;

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;
pub const DEFAULT_TOP_K: usize = 1;

/// Opening line of the section [`inject`] appends to the instruction.
pub const SKILLS_HEADER: &str = "RELEVANT SKILLS";
const SKILL_FENCE: &str = "---";

#[derive(Debug, Error)]
pub enum SkillError {
    #[error("skill `{0}` has an empty body")]
    EmptyBody(String),
    #[error("duplicate skill id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {reason}")]
    Document { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skill {
    pub skill_id: String,
    pub environment_id: String,
    #[serde(default)]
    pub task_type_tags: Vec<String>,
    pub title: String,
    pub body: String,
}

impl Skill {
    fn indexed_text(&self) -> String {
        format!("{}\n{}", self.title, self.body)
    }

    /// Parse a skill document: TOML front matter between `+++` lines, then
    /// the body.
    pub fn from_document(doc: &str) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Front {
            skill_id: String,
            environment_id: String,
            #[serde(default)]
            task_type_tags: Vec<String>,
            title: String,
        }
        let rest = doc.trim_start().strip_prefix("+++").ok_or("missing `+++` front matter")?;
        let (front, body) = rest.split_once("\n+++").ok_or("unterminated front matter")?;
        let front: Front = toml::from_str(front).map_err(|e| e.to_string())?;
        Ok(Skill {
            skill_id: front.skill_id,
            environment_id: front.environment_id,
            task_type_tags: front.task_type_tags,
            title: front.title,
            body: body.trim().to_string(),
        })
    }

    pub fn to_document(&self) -> String {
        #[derive(Serialize)]
        struct Front<'a> {
            skill_id: &'a str,
            environment_id: &'a str,
            task_type_tags: &'a [String],
            title: &'a str,
        }
        let front = toml::to_string(&Front {
            skill_id: &self.skill_id,
            environment_id: &self.environment_id,
            task_type_tags: &self.task_type_tags,
            title: &self.title,
        })
        .expect("front matter serializes");
        format!("+++\n{front}+++\n{}\n", self.body)
    }
}

/// Token statistics over the whole library.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkillIndex {
    pub term_freqs: Vec<BTreeMap<String, usize>>,
    pub doc_lens: Vec<usize>,
    pub doc_freqs: BTreeMap<String, usize>,
    pub avg_len: f64,
}

impl SkillIndex {
    fn build(skills: &[Skill]) -> Self {
        let mut index = SkillIndex::default();
        for skill in skills {
            let tokens = tokenize(&skill.indexed_text());
            let mut tf = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for term in tf.keys() {
                *index.doc_freqs.entry(term.clone()).or_insert(0) += 1;
            }
            index.doc_lens.push(tokens.len());
            index.term_freqs.push(tf);
        }
        let total: usize = index.doc_lens.iter().sum();
        index.avg_len = if skills.is_empty() { 0.0 } else { total as f64 / skills.len() as f64 };
        index
    }
}

#[derive(Debug, Clone, Default)]
pub struct SkillLibrary {
    skills: Vec<Skill>,
    index: SkillIndex,
}

impl SkillLibrary {
    pub fn new(skills: Vec<Skill>) -> Result<Self, SkillError> {
        let mut ids = std::collections::BTreeSet::new();
        for s in &skills {
            if s.body.trim().is_empty() {
                return Err(SkillError::EmptyBody(s.skill_id.clone()));
            }
            if !ids.insert(s.skill_id.clone()) {
                return Err(SkillError::DuplicateId(s.skill_id.clone()));
            }
        }
        let index = SkillIndex::build(&skills);
        Ok(Self { skills, index })
    }

    /// Load every `*.md` skill document in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Self, SkillError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "md"))
            .collect();
        paths.sort();
        let mut skills = Vec::new();
        for p in paths {
            let doc = std::fs::read_to_string(&p)?;
            let skill = Skill::from_document(&doc)
                .map_err(|reason| SkillError::Document { path: p.display().to_string(), reason })?;
            skills.push(skill);
        }
        Self::new(skills)
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    pub fn index(&self) -> &SkillIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.skills.len() as f64;
        let df = *self.index.doc_freqs.get(term).unwrap_or(&0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// BM25 score of the skill at position `doc` for the query tokens.
    pub fn score_at(&self, query: &[String], doc: usize) -> f64 {
        let tf = &self.index.term_freqs[doc];
        let len = self.index.doc_lens[doc] as f64;
        let norm = if self.index.avg_len > 0.0 { len / self.index.avg_len } else { 0.0 };
        query
            .iter()
            .filter_map(|term| {
                let f = *tf.get(term)? as f64;
                Some(self.idf(term) * f * (K1 + 1.0) / (f + K1 * (1.0 - B + B * norm)))
            })
            .sum()
    }
}

/// Score `skill` (looked up by id) against the query. Unknown skills score 0.
pub fn bm25_score(query: &[String], skill: &Skill, library: &SkillLibrary) -> f64 {
    library
        .skills
        .iter()
        .position(|s| s.skill_id == skill.skill_id)
        .map_or(0.0, |i| library.score_at(query, i))
}

/// Top-`k` skills for the task. `task_type` is the type parsed from the
/// instruction; when some skill of the environment carries that tag, the
/// candidates are narrowed to the tagged ones.
pub fn retrieve(task: &TaskSpec, library: &SkillLibrary, k: usize, task_type: Option<&str>) -> Vec<Skill> {
    let query = tokenize(&task.instruction);
    let in_env: Vec<usize> = (0..library.len())
        .filter(|&i| library.skills[i].environment_id == task.environment_id)
        .collect();
    let typed: Vec<usize> = match task_type {
        Some(tt) => in_env
            .iter()
            .copied()
            .filter(|&i| library.skills[i].task_type_tags.iter().any(|t| t == tt))
            .collect(),
        None => Vec::new(),
    };
    let candidates = if typed.is_empty() { in_env } else { typed };
    let mut scored: Vec<(f64, usize)> = candidates
        .into_iter()
        .map(|i| (library.score_at(&query, i), i))
        .filter(|(s, _)| *s > 0.0)
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| library.skills[a.1].skill_id.cmp(&library.skills[b.1].skill_id))
    });
    scored.into_iter().take(k).map(|(_, i)| library.skills[i].clone()).collect()
}

/// Append the retrieved skills to the instruction, producing `x'`.
pub fn inject(task: &TaskSpec, skills: &[Skill]) -> TaskSpec {
    if skills.is_empty() {
        return task.clone();
    }
    let mut instruction = task.instruction.clone();
    instruction.push_str("\n\n");
    instruction.push_str(SKILLS_HEADER);
    for s in skills {
        instruction.push_str(&format!("\n{SKILL_FENCE}\n## {}\n{}\n{SKILL_FENCE}", s.title, s.body));
    }
    TaskSpec { instruction, ..task.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskSpec;

    fn skill(id: &str, env: &str, body: &str) -> Skill {
        Skill {
            skill_id: id.into(),
            environment_id: env.into(),
            task_type_tags: vec![],
            title: String::new(),
            body: body.into(),
        }
    }

    #[test]
    fn empty_query_scores_zero() {
        let lib = SkillLibrary::new(vec![skill("a", "e", "heat the potato")]).unwrap();
        assert_eq!(bm25_score(&[], &lib.skills()[0], &lib), 0.0);
    }

    #[test]
    fn single_skill_self_query_positive() {
        let lib = SkillLibrary::new(vec![skill("a", "e", "heat the potato in microwave")]).unwrap();
        let q = tokenize(&lib.skills()[0].body);
        assert!(bm25_score(&q, &lib.skills()[0], &lib) > 0.0);
    }

    #[test]
    fn retrieve_empty_library() {
        let lib = SkillLibrary::new(vec![]).unwrap();
        let task = TaskSpec::bare("t", "heat a potato", "e");
        assert!(retrieve(&task, &lib, 1, None).is_empty());
    }

    #[test]
    fn ties_broken_by_id_and_zero_scores_excluded() {
        let lib = SkillLibrary::new(vec![
            skill("b", "e", "heat potato"),
            skill("a", "e", "heat potato"),
            skill("c", "e", "unrelated words"),
            skill("d", "other", "heat potato"),
        ])
        .unwrap();
        let task = TaskSpec::bare("t", "heat a potato", "e");
        let got: Vec<_> = retrieve(&task, &lib, 5, None).into_iter().map(|s| s.skill_id).collect();
        assert_eq!(got, vec!["a", "b"]);
        let top: Vec<_> = retrieve(&task, &lib, 1, None).into_iter().map(|s| s.skill_id).collect();
        assert_eq!(top, vec!["a"]);
    }

    #[test]
    fn task_type_prefilter() {
        let mut tagged = skill("z", "e", "potato");
        tagged.task_type_tags = vec!["heat".into()];
        let lib = SkillLibrary::new(vec![skill("a", "e", "heat potato microwave"), tagged]).unwrap();
        let task = TaskSpec::bare("t", "heat a potato", "e");
        assert_eq!(retrieve(&task, &lib, 1, Some("heat"))[0].skill_id, "z");
        assert_eq!(retrieve(&task, &lib, 1, Some("cool"))[0].skill_id, "a");
    }

    #[test]
    fn inject_shapes() {
        let task = TaskSpec::bare("t", "do it", "e");
        assert_eq!(inject(&task, &[]), task);
        let mut s = skill("a", "e", "step one");
        s.title = "Title".into();
        let out = inject(&task, &[s]);
        assert_eq!(out.instruction, "do it\n\nRELEVANT SKILLS\n---\n## Title\nstep one\n---");
    }

    #[test]
    fn library_rejects_bad_skills() {
        assert!(SkillLibrary::new(vec![skill("a", "e", "  ")]).is_err());
        assert!(SkillLibrary::new(vec![skill("a", "e", "x y"), skill("a", "e", "z w")]).is_err());
    }

    #[test]
    fn document_roundtrip() {
        let mut s = skill("s1", "minidb", "Run the mutation first.\nThen commit.");
        s.title = "Mutate then commit".into();
        s.task_type_tags = vec!["mutation".into()];
        assert_eq!(Skill::from_document(&s.to_document()).unwrap(), s);
    }
}
