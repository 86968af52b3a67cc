//! Intervention sets `H`: versioned, freezable collections of layer rules,
//! and their compiled per-episode form.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::ContractDelta;
use crate::realization::{GateRule, RealizationConfig};
use crate::regulation::{DetectorKind, RegulationConfig};
use crate::skill::{Skill, SkillError, SkillLibrary, DEFAULT_TOP_K};

#[derive(Debug, Error)]
pub enum InterventionError {
    #[error("intervention set `{0}` is frozen")]
    Frozen(String),
    #[error("intervention `{id}`: payload does not belong to layer {layer:?}")]
    LayerMismatch { id: String, layer: Layer },
    #[error("duplicate intervention id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {reason}")]
    Document { path: String, reason: String },
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Contract,
    Skill,
    #[serde(alias = "action")]
    ActionGate,
    Regulation,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Contract, Layer::Skill, Layer::ActionGate, Layer::Regulation];

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Layer::Contract => "contract",
            Layer::Skill => "skill",
            Layer::ActionGate => "action",
            Layer::Regulation => "regulation",
        }
    }

    pub fn from_cli_name(name: &str) -> Option<Layer> {
        Layer::ALL.into_iter().find(|l| l.cli_name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub detector: DetectorKind,
    /// Overrides the detector's default threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Contract(ContractDelta),
    Skill(Skill),
    Gate(GateRule),
    Detector(DetectorConfig),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub intervention_id: String,
    pub layer: Layer,
    #[serde(default)]
    pub provenance: String,
    pub payload: Payload,
}

impl Intervention {
    pub fn validate(&self) -> Result<(), InterventionError> {
        let ok = matches!(
            (self.layer, &self.payload),
            (Layer::Contract, Payload::Contract(_))
                | (Layer::Skill, Payload::Skill(_))
                | (Layer::ActionGate, Payload::Gate(_))
                | (Layer::Regulation, Payload::Detector(_))
        );
        if ok {
            Ok(())
        } else {
            Err(InterventionError::LayerMismatch { id: self.intervention_id.clone(), layer: self.layer })
        }
    }

    /// Environment the payload is scoped to; `None` applies to all.
    pub fn environment_id(&self) -> Option<&str> {
        match &self.payload {
            Payload::Contract(d) => (!d.environment_id.is_empty()).then_some(d.environment_id.as_str()),
            Payload::Detector(_) => None,
            Payload::Skill(s) => Some(&s.environment_id),
            Payload::Gate(g) => Some(&g.environment_id),
        }
    }

    pub fn from_toml(doc: &str) -> Result<Self, String> {
        let i: Intervention = toml::from_str(doc).map_err(|e| e.to_string())?;
        i.validate().map_err(|e| e.to_string())?;
        Ok(i)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("interventions serialize to TOML")
    }
}

/// Load every `*.toml` intervention in `dir`, ordered by file name.
pub fn load_registry(dir: &Path) -> Result<Vec<Intervention>, InterventionError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |x| x == "toml"))
        .collect();
    paths.sort();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        let i = Intervention::from_toml(&text)
            .map_err(|reason| InterventionError::Document { path: p.display().to_string(), reason })?;
        if !seen.insert(i.intervention_id.clone()) {
            return Err(InterventionError::DuplicateId(i.intervention_id));
        }
        out.push(i);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionSet {
    pub set_id: String,
    pub version: u32,
    pub interventions: Vec<Intervention>,
    pub frozen: bool,
}

impl InterventionSet {
    pub fn new(set_id: &str) -> Self {
        Self { set_id: set_id.into(), version: 0, interventions: Vec::new(), frozen: false }
    }

    /// Append an intervention and bump the version.
    pub fn push(&mut self, intervention: Intervention) -> Result<(), InterventionError> {
        if self.frozen {
            return Err(InterventionError::Frozen(self.set_id.clone()));
        }
        intervention.validate()?;
        if self.interventions.iter().any(|i| i.intervention_id == intervention.intervention_id) {
            return Err(InterventionError::DuplicateId(intervention.intervention_id));
        }
        self.interventions.push(intervention);
        self.version += 1;
        Ok(())
    }

    /// Frozen copy; freezing a frozen set is a no-op.
    pub fn freeze(&self) -> Self {
        Self { frozen: true, ..self.clone() }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.interventions.iter().any(|i| i.intervention_id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let set: InterventionSet = serde_json::from_str(text).map_err(|e| e.to_string())?;
        for i in &set.interventions {
            i.validate().map_err(|e| e.to_string())?;
        }
        Ok(set)
    }
}

/// Per-layer on/off switches for leave-one-layer-out runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerToggles {
    pub contract: bool,
    pub skill: bool,
    pub action: bool,
    pub regulation: bool,
}

impl Default for LayerToggles {
    fn default() -> Self {
        Self { contract: true, skill: true, action: true, regulation: true }
    }
}

impl LayerToggles {
    pub fn is_on(&self, layer: Layer) -> bool {
        match layer {
            Layer::Contract => self.contract,
            Layer::Skill => self.skill,
            Layer::ActionGate => self.action,
            Layer::Regulation => self.regulation,
        }
    }

    pub fn without(mut self, layer: Layer) -> Self {
        match layer {
            Layer::Contract => self.contract = false,
            Layer::Skill => self.skill = false,
            Layer::ActionGate => self.action = false,
            Layer::Regulation => self.regulation = false,
        }
        self
    }
}

/// An intervention set resolved into what each layer consumes.
#[derive(Debug, Clone)]
pub struct Harness {
    pub set_id: String,
    pub version: u32,
    pub contract_deltas: Vec<ContractDelta>,
    pub skills: SkillLibrary,
    pub top_k: usize,
    /// Narrow retrieval to skills tagged with the parsed task type.
    pub task_type_prefilter: bool,
    pub gates: Vec<GateRule>,
    pub realization: RealizationConfig,
    pub regulation: RegulationConfig,
}

impl Harness {
    pub fn compile(set: &InterventionSet, toggles: LayerToggles) -> Result<Self, InterventionError> {
        let mut deltas = Vec::new();
        let mut skills = Vec::new();
        let mut gates = Vec::new();
        let mut regulation = RegulationConfig::default();
        for i in &set.interventions {
            i.validate()?;
            if !toggles.is_on(i.layer) {
                continue;
            }
            match &i.payload {
                Payload::Contract(d) => deltas.push(d.clone()),
                Payload::Skill(s) => skills.push(s.clone()),
                Payload::Gate(g) => gates.push(g.clone()),
                Payload::Detector(d) => {
                    regulation.enabled.insert(d.detector);
                    if let Some(t) = d.threshold {
                        match d.detector {
                            DetectorKind::Budget => regulation.budget_warn = t,
                            DetectorKind::Repetition => regulation.repeat_k = t.max(1) as usize,
                            DetectorKind::NoProgress => regulation.stall_k = t.max(1) as usize,
                            DetectorKind::Oscillation => regulation.oscillation_window = t.max(4) as usize,
                        }
                    }
                }
            }
        }
        Ok(Self {
            set_id: set.set_id.clone(),
            version: set.version,
            contract_deltas: deltas,
            skills: SkillLibrary::new(skills)?,
            top_k: DEFAULT_TOP_K,
            task_type_prefilter: true,
            gates,
            realization: RealizationConfig::default(),
            regulation,
        })
    }

    /// The pass-through harness: no interventions at all.
    pub fn pass_through() -> Self {
        Self::compile(&InterventionSet::new("none"), LayerToggles::default()).expect("empty set compiles")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::{Condition, GateEffect};

    fn detector(id: &str, kind: DetectorKind) -> Intervention {
        Intervention {
            intervention_id: id.into(),
            layer: Layer::Regulation,
            provenance: "loops".into(),
            payload: Payload::Detector(DetectorConfig { detector: kind, threshold: None }),
        }
    }

    fn gate(id: &str) -> Intervention {
        Intervention {
            intervention_id: id.into(),
            layer: Layer::ActionGate,
            provenance: String::new(),
            payload: Payload::Gate(GateRule {
                rule_id: id.into(),
                environment_id: "minidb".into(),
                trigger: Condition::All(vec![Condition::eq("parsed", "false"), Condition::Always]),
                effect: GateEffect::Block { message: "no call".into(), suggest: None },
            }),
        }
    }

    #[test]
    fn freeze_blocks_mutation() {
        let mut s = InterventionSet::new("h");
        s.push(detector("d1", DetectorKind::Repetition)).unwrap();
        assert_eq!(s.version, 1);
        let f = s.freeze();
        assert!(f.frozen);
        let mut f2 = f.freeze();
        assert!(matches!(f2.push(detector("d2", DetectorKind::Budget)), Err(InterventionError::Frozen(_))));
        assert_eq!(f2, f);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let mut s = InterventionSet::new("h");
        s.push(gate("g1")).unwrap();
        s.push(detector("d1", DetectorKind::NoProgress)).unwrap();
        let f = s.freeze();
        let text = f.to_json();
        let back = InterventionSet::from_json(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn toml_document_roundtrip() {
        for i in [gate("g1"), detector("d1", DetectorKind::Oscillation)] {
            assert_eq!(Intervention::from_toml(&i.to_toml()).unwrap(), i);
        }
    }

    #[test]
    fn layer_mismatch_rejected() {
        let mut i = gate("g1");
        i.layer = Layer::Skill;
        assert!(i.validate().is_err());
        assert!(InterventionSet::new("h").push(i).is_err());
    }

    #[test]
    fn toggles_drop_layers() {
        let mut s = InterventionSet::new("h");
        s.push(gate("g1")).unwrap();
        s.push(detector("d1", DetectorKind::Repetition)).unwrap();
        let h = Harness::compile(&s, LayerToggles::default().without(Layer::Regulation)).unwrap();
        assert!(h.regulation.enabled.is_empty());
        assert_eq!(h.gates.len(), 1);
    }
}
