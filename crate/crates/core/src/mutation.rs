//! Seeded defects for measuring what the validators catch.
//!
//! Each mutation records the subtask a correct diagnosis must name. All but
//! one edit the graph; [`MutationKind::DeleteRootInput`] removes a root
//! input from the generated planning problem, since a graph cannot declare
//! an input without also making it initially available.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pddl::{generate_problem, Fact, SymbolKind};
use crate::planner::{score_problem, structured_plan_score, PlanScore};
use crate::sop::{normalize_var, StructuredSop};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationKind {
    /// Drop a dependency that a binding still draws from.
    RemoveDependencyEdge,
    /// Point a binding at a subtask outside the consumer's dependencies.
    RedirectBinding,
    /// Make a binding name an output its source does not produce.
    RenameSourceOutput,
    /// Make an ancestor depend on its descendant.
    IntroduceCycle,
    /// Delete a subtask's parent, leaving the subtask dangling.
    OrphanSubtask,
    /// Withhold a root input from the initial state.
    DeleteRootInput,
}

impl MutationKind {
    pub const ALL: [MutationKind; 6] = [
        MutationKind::RemoveDependencyEdge,
        MutationKind::RedirectBinding,
        MutationKind::RenameSourceOutput,
        MutationKind::IntroduceCycle,
        MutationKind::OrphanSubtask,
        MutationKind::DeleteRootInput,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub kind: MutationKind,
    /// Subtask the defect was planted in.
    pub target: String,
    pub sop: StructuredSop,
    /// Variable withheld from the initial state, in normal form.
    pub withheld_input: Option<String>,
}

impl Mutation {
    /// Structured Plan Score of the mutated graph, honouring a withheld
    /// input.
    pub fn plan_score(&self) -> PlanScore {
        let Some(v) = &self.withheld_input else {
            return structured_plan_score(&self.sop);
        };
        let (mut problem, symbols) = generate_problem(&self.sop).expect("fixture symbols are valid");
        let sym = symbols
            .symbol(SymbolKind::Variable, v)
            .expect("withheld input is a problem variable")
            .to_string();
        problem.init.remove(&Fact::Available(sym));
        score_problem(&self.sop, &problem, &symbols)
    }
}

/// Applies `kind` at a randomly chosen applicable site, or returns `None`
/// when the graph has no such site.
pub fn mutate<R: Rng + ?Sized>(sop: &StructuredSop, kind: MutationKind, rng: &mut R) -> Option<Mutation> {
    let mut out = sop.clone();
    let done = |target: &str, sop: StructuredSop, withheld: Option<String>| Mutation {
        kind,
        target: target.to_string(),
        sop,
        withheld_input: withheld,
    };
    match kind {
        MutationKind::RemoveDependencyEdge => {
            let sites: Vec<(String, String)> = sop
                .iter()
                .flat_map(|st| {
                    st.inputs_from_dependencies
                        .iter()
                        .filter(|b| st.dependencies.contains(&b.source_subtask))
                        .map(|b| (st.id.clone(), b.source_subtask.clone()))
                })
                .collect();
            let (id, dep) = sites.choose(rng)?;
            out.subtasks[id].dependencies.retain(|d| d != dep);
            Some(done(id, out, None))
        }
        MutationKind::RedirectBinding => {
            let mut sites = Vec::new();
            for st in sop.iter() {
                for (i, _) in st.inputs_from_dependencies.iter().enumerate() {
                    for other in sop.iter() {
                        if other.id != st.id && !st.dependencies.contains(&other.id) {
                            sites.push((st.id.clone(), i, other.id.clone()));
                        }
                    }
                }
            }
            let (id, i, to) = sites.choose(rng)?;
            out.subtasks[id].inputs_from_dependencies[*i].source_subtask = to.clone();
            Some(done(id, out, None))
        }
        MutationKind::RenameSourceOutput => {
            let sites: Vec<(String, usize)> = sop
                .iter()
                .flat_map(|st| (0..st.inputs_from_dependencies.len()).map(|i| (st.id.clone(), i)))
                .collect();
            let (id, i) = sites.choose(rng)?;
            let binding = &sop.subtasks[id].inputs_from_dependencies[*i];
            let produced: BTreeSet<String> = sop
                .get(&binding.source_subtask)
                .map(|s| s.outputs.iter().map(|o| normalize_var(o)).collect())
                .unwrap_or_default();
            let mut renamed = format!("{} draft", binding.source_output);
            while produced.contains(&normalize_var(&renamed)) {
                renamed.push('x');
            }
            out.subtasks[id].inputs_from_dependencies[*i].source_output = renamed;
            Some(done(id, out, None))
        }
        MutationKind::IntroduceCycle => {
            let sites: Vec<(String, String)> = sop
                .iter()
                .flat_map(|st| st.dependencies.iter().map(|d| (d.clone(), st.id.clone())))
                .filter(|(parent, _)| sop.get(parent).is_some())
                .collect();
            let (ancestor, descendant) = sites.choose(rng)?;
            out.subtasks[ancestor].dependencies.push(descendant.clone());
            Some(done(ancestor, out, None))
        }
        MutationKind::OrphanSubtask => {
            let sites: Vec<(String, String)> = sop
                .iter()
                .flat_map(|st| st.dependencies.iter().map(|d| (st.id.clone(), d.clone())))
                .filter(|(_, parent)| sop.get(parent).is_some())
                .collect();
            let (child, parent) = sites.choose(rng)?;
            out.subtasks.shift_remove(parent);
            Some(done(child, out, None))
        }
        MutationKind::DeleteRootInput => {
            let produced: BTreeSet<String> = sop
                .iter()
                .flat_map(|st| {
                    st.outputs.iter().cloned().chain(
                        st.inputs_from_dependencies
                            .iter()
                            .filter(|b| normalize_var(&b.source_output) != normalize_var(&b.bound_as))
                            .map(|b| b.bound_as.clone()),
                    )
                })
                .map(|v| normalize_var(&v))
                .collect();
            let sites: Vec<(String, String)> = sop
                .roots()
                .flat_map(|st| st.inputs.iter().map(|v| (st.id.clone(), normalize_var(v))))
                .filter(|(_, v)| !produced.contains(v))
                .collect();
            let (root, v) = sites.choose(rng)?;
            Some(done(root, out, Some(v.clone())))
        }
    }
}
