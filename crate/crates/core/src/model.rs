//! Usability process reference model and assessment model.
//!
//! The model is plain data: sub-processes with their purpose and outcomes,
//! one indicator (questionnaire item) per customized practice, and a glossary.
//! The canonical content ships as a versioned JSON document and is loaded
//! through [`load_reference_model`], so alternative customizations or
//! translations can be swapped in without touching the engine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical model, original questionnaire wording.
pub const CANONICAL_MODEL_JSON: &str = include_str!("../data/upcase-model-1.0.json");
/// Revision with the clarified item wording ("describe" removed, items 2 reworded).
pub const REVISED_MODEL_JSON: &str = include_str!("../data/upcase-model-1.1.json");

/// Identifier of one of the four usability sub-processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubProcessId {
    UP1,
    UP2,
    UP3,
    UP4,
}

impl SubProcessId {
    pub const ALL: [SubProcessId; 4] = [Self::UP1, Self::UP2, Self::UP3, Self::UP4];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UP1 => "UP1",
            Self::UP2 => "UP2",
            Self::UP3 => "UP3",
            Self::UP4 => "UP4",
        }
    }
}

impl fmt::Display for SubProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubProcessId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "UP1" => Ok(Self::UP1),
            "UP2" => Ok(Self::UP2),
            "UP3" => Ok(Self::UP3),
            "UP4" => Ok(Self::UP4),
            other => Err(ModelError::UnknownSubProcess(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubProcess {
    pub id: SubProcessId,
    pub title: String,
    pub purpose: String,
    pub outcomes: Vec<String>,
}

/// Placeholder for indicator details the model does not define.
pub const UNSPECIFIED: &str = "unspecified";

/// One questionnaire item and the practice it operationalizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub id: u32,
    pub sub_process: SubProcessId,
    pub practice: String,
    pub description: String,
    pub statement: String,
    pub techniques: Vec<String>,
    pub work_products: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub term: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceModel {
    pub version: String,
    pub sub_processes: Vec<SubProcess>,
    pub indicators: Vec<Indicator>,
    pub glossary: Vec<GlossaryEntry>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read model document: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid model: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("indicator {0} not found")]
    IndicatorNotFound(u32),
    #[error("unknown sub-process: {0}")]
    UnknownSubProcess(String),
}

/// Parses and validates a model document.
pub fn load_reference_model<R: Read>(mut source: R) -> Result<ReferenceModel, ModelError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf)?;
    let model: ReferenceModel = serde_json::from_str(&buf)?;
    let violations = validate_reference_model(&model);
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(ModelError::Validation(violations))
    }
}

/// Lists every violated model invariant. An empty list means the model is valid.
pub fn validate_reference_model(model: &ReferenceModel) -> Vec<String> {
    let mut violations = Vec::new();

    let mut seen_sp = BTreeSet::new();
    for sp in &model.sub_processes {
        if !seen_sp.insert(sp.id) {
            violations.push(format!("duplicate sub-process: {}", sp.id));
        }
    }
    for id in SubProcessId::ALL {
        if !seen_sp.contains(&id) {
            violations.push(format!("missing sub-process: {id}"));
        }
    }

    let count = model.indicators.len() as u32;
    let mut seen_ids = BTreeSet::new();
    let mut per_sp: BTreeMap<SubProcessId, usize> = BTreeMap::new();
    for ind in &model.indicators {
        if ind.id == 0 || ind.id > count {
            violations.push(format!("indicator {}: id out of range", ind.id));
        }
        if !seen_ids.insert(ind.id) {
            violations.push(format!("indicator {}: duplicate id", ind.id));
        }
        if !seen_sp.contains(&ind.sub_process) {
            violations.push(format!(
                "indicator {}: references missing sub-process {}",
                ind.id, ind.sub_process
            ));
        }
        *per_sp.entry(ind.sub_process).or_default() += 1;
        if ind.statement.trim().is_empty() {
            violations.push(format!("indicator {}: empty statement", ind.id));
        }
        if ind.techniques.iter().all(|t| t.trim().is_empty()) {
            violations.push(format!("indicator {}: no techniques", ind.id));
        }
        if ind.work_products.iter().all(|w| w.trim().is_empty()) {
            violations.push(format!("indicator {}: no work products", ind.id));
        }
    }
    for id in (1..=count).filter(|id| !seen_ids.contains(id)) {
        violations.push(format!("indicator ids not contiguous: {id} missing"));
    }

    for sp in &model.sub_processes {
        if per_sp.get(&sp.id).copied().unwrap_or(0) == 0 {
            violations.push(format!("sub-process without indicators: {}", sp.id));
        }
    }

    let mut terms = BTreeSet::new();
    for entry in &model.glossary {
        let key = entry.term.trim().to_lowercase();
        if !terms.insert(key.clone()) {
            violations.push(format!("duplicate glossary term: {key}"));
        }
    }

    violations
}

impl ReferenceModel {
    /// The shipped model (version 1.0). Panics only if the embedded file is broken,
    /// which the test suite rules out.
    pub fn canonical() -> Self {
        load_reference_model(CANONICAL_MODEL_JSON.as_bytes()).expect("embedded model is valid")
    }

    pub fn revised() -> Self {
        load_reference_model(REVISED_MODEL_JSON.as_bytes()).expect("embedded model is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn sub_process(&self, id: SubProcessId) -> Option<&SubProcess> {
        self.sub_processes.iter().find(|sp| sp.id == id)
    }

    pub fn indicators_of(&self, id: SubProcessId) -> impl Iterator<Item = &Indicator> {
        self.indicators
            .iter()
            .filter(move |ind| ind.sub_process == id)
    }

    /// Indicator ids in ascending order.
    pub fn indicator_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.indicators.iter().map(|i| i.id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn glossary_lookup(&self, term: &str) -> Option<&GlossaryEntry> {
        let key = term.trim().to_lowercase();
        self.glossary.iter().find(|g| g.term.to_lowercase() == key)
    }
}

pub fn lookup_indicator(model: &ReferenceModel, id: u32) -> Result<&Indicator, ModelError> {
    model
        .indicators
        .iter()
        .find(|ind| ind.id == id)
        .ok_or(ModelError::IndicatorNotFound(id))
}
