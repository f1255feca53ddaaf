//! Canonical data model for structured SOPs.
//!
//! A [`StructuredSop`] is a dependency DAG of [`Subtask`]s. Each subtask
//! carries the seven procedure attributes (name, description, dependencies,
//! inputs, inputs from dependencies, outputs, category). Parsing, serializing
//! and the pure graph queries live in the submodules and are re-exported here.

mod graph;
mod json;
mod names;
pub mod random;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use graph::{goal_state, initial_state, topological_order};
pub use json::{parse_sop, parse_sop_unchecked, serialize_sop, serialize_sop_pretty, ROOT_KEY};
pub use names::normalize_var;

/// Operational nature of a subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Receiving and saving user-provided information.
    HumanInput,
    /// Analyzing, verifying or manipulating data.
    InformationProcessing,
    /// Actively searching for information not given in the procedure.
    InformationExtraction,
    /// Background information, not directly actionable.
    Knowledge,
    /// Decisions, judgments, interpretations or conclusions.
    Decision,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::HumanInput,
        Category::InformationProcessing,
        Category::InformationExtraction,
        Category::Knowledge,
        Category::Decision,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::HumanInput => "HumanInput",
            Category::InformationProcessing => "InformationProcessing",
            Category::InformationExtraction => "InformationExtraction",
            Category::Knowledge => "Knowledge",
            Category::Decision => "Decision",
        }
    }

    /// Accepts the canonical spelling as well as spaced, hyphenated or
    /// underscored variants in any case (`"Human Input"`, `"human_input"`).
    pub fn parse(s: &str) -> Option<Category> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().to_lowercase() == key)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A subtask consumes `source_output` of `source_subtask` under the local
/// name `bound_as`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binding {
    pub source_subtask: String,
    pub source_output: String,
    pub bound_as: String,
}

impl Binding {
    pub fn new(
        source_subtask: impl Into<String>,
        source_output: impl Into<String>,
        bound_as: impl Into<String>,
    ) -> Self {
        Binding {
            source_subtask: source_subtask.into(),
            source_output: source_output.into(),
            bound_as: bound_as.into(),
        }
    }
}

/// One vertex of the procedure graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Subtask {
    pub id: String,
    pub name: String,
    pub description: String,
    /// Parent subtask ids.
    pub dependencies: Vec<String>,
    /// Variables taken from the initial state, not from any dependency.
    pub inputs: Vec<String>,
    pub inputs_from_dependencies: Vec<Binding>,
    pub outputs: Vec<String>,
    pub category: Category,
    /// Unknown JSON fields, kept for round-trip fidelity.
    pub extra: Map<String, Value>,
}

impl Subtask {
    pub fn new(id: impl Into<String>, category: Category) -> Self {
        let id = id.into();
        Subtask {
            name: id.clone(),
            id,
            description: String::new(),
            dependencies: Vec::new(),
            inputs: Vec::new(),
            inputs_from_dependencies: Vec::new(),
            outputs: Vec::new(),
            category,
            extra: Map::new(),
        }
    }

    /// Every variable the subtask needs before it can run: its own inputs
    /// plus the local names of its bindings, normalized and deduplicated in
    /// first-appearance order.
    pub fn required_variables(&self) -> Vec<String> {
        let mut seen = Vec::new();
        let names = self
            .inputs
            .iter()
            .chain(self.inputs_from_dependencies.iter().map(|b| &b.bound_as));
        for name in names {
            let n = normalize_var(name);
            if !seen.contains(&n) {
                seen.push(n);
            }
        }
        seen
    }
}

/// Where a structured SOP came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment_ids: Vec<String>,
}

/// The procedure graph: subtasks keyed by id, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StructuredSop {
    pub subtasks: IndexMap<String, Subtask>,
    pub source_ref: Option<SourceRef>,
    /// Unknown top-level JSON fields.
    pub extra: Map<String, Value>,
}

impl StructuredSop {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from subtasks without validating it.
    pub fn from_subtasks(subtasks: impl IntoIterator<Item = Subtask>) -> Self {
        StructuredSop {
            subtasks: subtasks.into_iter().map(|s| (s.id.clone(), s)).collect(),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Subtask> {
        self.subtasks.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Subtask> {
        self.subtasks.values()
    }

    /// Subtasks with no dependencies.
    pub fn roots(&self) -> impl Iterator<Item = &Subtask> {
        self.iter().filter(|s| s.dependencies.is_empty())
    }

    /// Subtasks no other subtask depends on.
    pub fn leaves(&self) -> impl Iterator<Item = &Subtask> {
        self.iter().filter(move |s| {
            !self
                .iter()
                .any(|other| other.dependencies.iter().any(|d| d == &s.id))
        })
    }

    /// Checks every subtask and graph invariant, returning the first
    /// violation found.
    pub fn check(&self) -> Result<(), SopError> {
        for st in self.iter() {
            check_subtask(st)?;
        }
        for st in self.iter() {
            for dep in &st.dependencies {
                if !self.subtasks.contains_key(dep) {
                    return Err(SopError::graph(
                        GraphErrorKind::DanglingReference,
                        &st.id,
                        format!("dependency `{dep}` does not exist"),
                    ));
                }
            }
            for b in &st.inputs_from_dependencies {
                if b.source_subtask == st.id {
                    return Err(SopError::graph(
                        GraphErrorKind::SelfLoop,
                        &st.id,
                        "binds an input from itself".to_string(),
                    ));
                }
                if !self.subtasks.contains_key(&b.source_subtask) {
                    return Err(SopError::graph(
                        GraphErrorKind::DanglingReference,
                        &st.id,
                        format!("binding source `{}` does not exist", b.source_subtask),
                    ));
                }
            }
        }
        topological_order(self).map(|_| ())
    }
}

/// Subtask-local invariants.
pub(crate) fn check_subtask(st: &Subtask) -> Result<(), SopError> {
    if st.id.trim().is_empty() {
        return Err(SopError::schema(None, "subtask id must be nonempty"));
    }
    for (i, dep) in st.dependencies.iter().enumerate() {
        if dep == &st.id {
            return Err(SopError::graph(
                GraphErrorKind::SelfLoop,
                &st.id,
                "lists itself as a dependency".to_string(),
            ));
        }
        if st.dependencies[..i].contains(dep) {
            return Err(SopError::schema(
                Some(&st.id),
                format!("duplicate dependency `{dep}`"),
            ));
        }
    }
    if let Some(slot) = duplicate_input_slot(st) {
        return Err(SopError::schema(
            Some(&st.id),
            format!("input slot `{slot}` is defined more than once"),
        ));
    }
    Ok(())
}

/// First `bound_as` name that collides with an input or another binding.
pub(crate) fn duplicate_input_slot(st: &Subtask) -> Option<String> {
    let inputs: Vec<String> = st.inputs.iter().map(|v| normalize_var(v)).collect();
    let mut bound: Vec<String> = Vec::new();
    for b in &st.inputs_from_dependencies {
        let n = normalize_var(&b.bound_as);
        if inputs.contains(&n) || bound.contains(&n) {
            return Some(n);
        }
        bound.push(n);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphErrorKind {
    DanglingReference,
    Cycle,
    SelfLoop,
}

impl fmt::Display for GraphErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphErrorKind::DanglingReference => "dangling reference",
            GraphErrorKind::Cycle => "cycle",
            GraphErrorKind::SelfLoop => "self loop",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SopError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error{}: {message}", subtask.as_ref().map(|s| format!(" in `{s}`")).unwrap_or_default())]
    Schema {
        subtask: Option<String>,
        message: String,
    },

    #[error("{kind} at `{subtask}`: {detail}")]
    Graph {
        kind: GraphErrorKind,
        subtask: String,
        detail: String,
        /// For cycles: the subtask ids on one cycle, in dependency order.
        witness: Vec<String>,
    },
}

impl SopError {
    pub(crate) fn schema(subtask: Option<&str>, message: impl Into<String>) -> Self {
        SopError::Schema {
            subtask: subtask.map(str::to_string),
            message: message.into(),
        }
    }

    pub(crate) fn graph(kind: GraphErrorKind, subtask: &str, detail: String) -> Self {
        SopError::Graph {
            kind,
            subtask: subtask.to_string(),
            detail,
            witness: Vec::new(),
        }
    }

    /// The subtask the error is attributed to, when there is one.
    pub fn subtask(&self) -> Option<&str> {
        match self {
            SopError::Json(_) => None,
            SopError::Schema { subtask, .. } => subtask.as_deref(),
            SopError::Graph { subtask, .. } => Some(subtask),
        }
    }
}

/// Raw procedure text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SopDocument {
    pub doc_id: String,
    pub text: String,
}

impl SopDocument {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Result<Self, SopError> {
        let doc = SopDocument {
            doc_id: doc_id.into(),
            text: text.into(),
        };
        if doc.text.split_whitespace().next().is_none() {
            return Err(SopError::schema(
                None,
                format!("document `{}` is empty", doc.doc_id),
            ));
        }
        Ok(doc)
    }
}

/// A contiguous slice of a document. Offsets count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub seg_id: String,
    pub start_offset: usize,
    pub end_offset: usize,
    pub text: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_spellings() {
        assert_eq!(Category::parse("Human Input"), Some(Category::HumanInput));
        assert_eq!(
            Category::parse("information_extraction"),
            Some(Category::InformationExtraction)
        );
        assert_eq!(Category::parse("DECISION"), Some(Category::Decision));
        assert_eq!(Category::parse("Cooking"), None);
    }

    #[test]
    fn blank_document_rejected() {
        assert!(SopDocument::new("d", " \n\t ").is_err());
        assert!(SopDocument::new("d", "Mix.").is_ok());
    }

    #[test]
    fn duplicate_slot_detected_after_normalization() {
        let mut st = Subtask::new("s", Category::Knowledge);
        st.inputs.push("Melted Butter".into());
        st.inputs_from_dependencies
            .push(Binding::new("a", "x", "melted_butter"));
        assert_eq!(duplicate_input_slot(&st).as_deref(), Some("melted_butter"));
    }

    #[test]
    fn roots_and_leaves() {
        let a = Subtask::new("a", Category::HumanInput);
        let mut b = Subtask::new("b", Category::Decision);
        b.dependencies.push("a".into());
        let sop = StructuredSop::from_subtasks([a, b]);
        assert_eq!(sop.roots().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["a"]);
        assert_eq!(sop.leaves().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["b"]);
    }
}
