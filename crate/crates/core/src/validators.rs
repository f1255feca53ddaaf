//! Deterministic per-graph metrics and structural preflight.
//!
//! Both scores are the fraction of subtasks that pass the check; an empty
//! graph scores 1.0. Only violations are reported as findings, so a score is
//! 1.0 exactly when its findings are empty.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::sop::{duplicate_input_slot, normalize_var, StructuredSop};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Check {
    Dependency,
    InputFromDependency,
    Structure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructureIssue {
    EmptyId,
    DuplicateDependency,
    DuplicateInputSlot,
    SelfLoop,
    DanglingReference,
    Cycle,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub subtask_id: String,
    pub check: Check,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<StructureIssue>,
    pub ok: bool,
    pub detail: String,
}

impl Finding {
    fn violation(subtask_id: &str, check: Check, detail: String) -> Self {
        Finding {
            subtask_id: subtask_id.to_string(),
            check,
            issue: None,
            ok: false,
            detail,
        }
    }

    fn structure(subtask_id: &str, issue: StructureIssue, detail: String) -> Self {
        Finding {
            issue: Some(issue),
            ..Finding::violation(subtask_id, Check::Structure, detail)
        }
    }
}

/// Result of one per-subtask check over a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckScore {
    pub score: f64,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicScores {
    pub dependency_score: f64,
    pub input_from_dependency_score: f64,
    pub findings: Vec<Finding>,
}

/// A subtask passes iff every binding's source is one of its dependencies.
pub fn dependency_check(sop: &StructuredSop) -> CheckScore {
    score_subtasks(sop, |st, out| {
        for b in &st.inputs_from_dependencies {
            if !st.dependencies.contains(&b.source_subtask) {
                out.push(Finding::violation(
                    &st.id,
                    Check::Dependency,
                    format!(
                        "input `{}` expected from `{}`, which is not a dependency",
                        b.bound_as, b.source_subtask
                    ),
                ));
            }
        }
    })
}

/// A subtask passes iff every binding names an output its source produces
/// (compared in variable normal form).
pub fn input_from_dependency_check(sop: &StructuredSop) -> CheckScore {
    score_subtasks(sop, |st, out| {
        for b in &st.inputs_from_dependencies {
            let detail = match sop.get(&b.source_subtask) {
                None => format!("source subtask `{}` does not exist", b.source_subtask),
                Some(src) => {
                    let wanted = normalize_var(&b.source_output);
                    if src.outputs.iter().any(|o| normalize_var(o) == wanted) {
                        continue;
                    }
                    format!("{} not in outputs({})", b.source_output, b.source_subtask)
                }
            };
            out.push(Finding::violation(&st.id, Check::InputFromDependency, detail));
        }
    })
}

pub fn deterministic_scores(sop: &StructuredSop) -> DeterministicScores {
    let dep = dependency_check(sop);
    let ifd = input_from_dependency_check(sop);
    let mut findings = dep.findings;
    findings.extend(ifd.findings);
    DeterministicScores {
        dependency_score: dep.score,
        input_from_dependency_score: ifd.score,
        findings,
    }
}

fn score_subtasks(
    sop: &StructuredSop,
    check: impl Fn(&crate::sop::Subtask, &mut Vec<Finding>),
) -> CheckScore {
    let mut findings = Vec::new();
    let mut failing = 0usize;
    for st in sop.iter() {
        let before = findings.len();
        check(st, &mut findings);
        if findings.len() > before {
            failing += 1;
        }
    }
    let score = if sop.is_empty() {
        1.0
    } else {
        (sop.len() - failing) as f64 / sop.len() as f64
    };
    CheckScore { score, findings }
}

/// Reports every structural invariant violation plus subtasks that cannot
/// be reached from a root. Empty iff the graph is a well-formed DAG in which
/// every subtask descends from some root.
pub fn structural_preflight(sop: &StructuredSop) -> Vec<Finding> {
    let mut findings = Vec::new();
    // Usable parent -> child edges; self loops and dangling ends excluded.
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();

    for st in sop.iter() {
        if st.id.trim().is_empty() {
            findings.push(Finding::structure(
                &st.id,
                StructureIssue::EmptyId,
                "subtask id is empty".into(),
            ));
        }
        let mut seen = HashSet::new();
        for dep in &st.dependencies {
            if !seen.insert(dep.as_str()) {
                findings.push(Finding::structure(
                    &st.id,
                    StructureIssue::DuplicateDependency,
                    format!("dependency `{dep}` listed twice"),
                ));
                continue;
            }
            if dep == &st.id {
                findings.push(Finding::structure(
                    &st.id,
                    StructureIssue::SelfLoop,
                    "lists itself as a dependency".into(),
                ));
            } else if !sop.subtasks.contains_key(dep) {
                findings.push(Finding::structure(
                    &st.id,
                    StructureIssue::DanglingReference,
                    format!("dependency `{dep}` does not exist"),
                ));
            } else {
                children.entry(dep.as_str()).or_default().push(&st.id);
            }
        }
        for b in &st.inputs_from_dependencies {
            if b.source_subtask == st.id {
                findings.push(Finding::structure(
                    &st.id,
                    StructureIssue::SelfLoop,
                    format!("binds `{}` from itself", b.bound_as),
                ));
            } else if !sop.subtasks.contains_key(&b.source_subtask) {
                findings.push(Finding::structure(
                    &st.id,
                    StructureIssue::DanglingReference,
                    format!("binding source `{}` does not exist", b.source_subtask),
                ));
            }
        }
        if let Some(slot) = duplicate_input_slot(st) {
            findings.push(Finding::structure(
                &st.id,
                StructureIssue::DuplicateInputSlot,
                format!("input slot `{slot}` is defined more than once"),
            ));
        }
    }

    let ids: Vec<&str> = sop.subtasks.keys().map(String::as_str).collect();
    let cyclic = cyclic_components(&ids, &children);
    let mut on_cycle = HashSet::new();
    for comp in &cyclic {
        let members = comp.join(", ");
        for id in comp {
            on_cycle.insert(*id);
            findings.push(Finding::structure(
                id,
                StructureIssue::Cycle,
                format!("on a dependency cycle among {{{members}}}"),
            ));
        }
    }

    let mut reached: HashSet<&str> = HashSet::new();
    let mut queue: VecDeque<&str> = sop
        .roots()
        .map(|s| s.id.as_str())
        .collect();
    reached.extend(queue.iter().copied());
    while let Some(id) = queue.pop_front() {
        for child in children.get(id).into_iter().flatten() {
            if reached.insert(child) {
                queue.push_back(child);
            }
        }
    }
    for id in &ids {
        if !reached.contains(id) && !on_cycle.contains(id) {
            findings.push(Finding::structure(
                id,
                StructureIssue::Unreachable,
                "not reachable from any root subtask".into(),
            ));
        }
    }
    findings
}

/// Strongly connected components that contain a cycle, each sorted, in
/// order of their smallest member. Iterative Tarjan.
fn cyclic_components<'a>(ids: &[&'a str], children: &HashMap<&'a str, Vec<&'a str>>) -> Vec<Vec<&'a str>> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut low: HashMap<&str, usize> = HashMap::new();
    let mut on_stack: HashSet<&str> = HashSet::new();
    let mut stack: Vec<&str> = Vec::new();
    let mut next = 0usize;
    let mut comps: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let empty = Vec::new();

    for &root in ids {
        if index.contains_key(root) {
            continue;
        }
        // (node, next child position)
        let mut work: Vec<(&str, usize)> = vec![(root, 0)];
        index.insert(root, next);
        low.insert(root, next);
        next += 1;
        stack.push(root);
        on_stack.insert(root);
        while let Some(&mut (node, ref mut pos)) = work.last_mut() {
            let kids = children.get(node).unwrap_or(&empty);
            if *pos < kids.len() {
                let child = kids[*pos];
                *pos += 1;
                if !index.contains_key(child) {
                    index.insert(child, next);
                    low.insert(child, next);
                    next += 1;
                    stack.push(child);
                    on_stack.insert(child);
                    work.push((child, 0));
                } else if on_stack.contains(child) {
                    let l = low[node].min(index[child]);
                    low.insert(node, l);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                let l = low[parent].min(low[node]);
                low.insert(parent, l);
            }
            if low[node] == index[node] {
                let mut comp = Vec::new();
                loop {
                    let top = stack.pop().expect("node is on the stack");
                    on_stack.remove(top);
                    comp.push(top);
                    if top == node {
                        break;
                    }
                }
                let self_loop = kids.contains(&node);
                if comp.len() > 1 || self_loop {
                    comp.sort_unstable();
                    comps.insert(comp[0], comp);
                }
            }
        }
    }
    comps.into_values().collect()
}

/// Renders findings as JSON lines, one finding per line.
pub fn findings_to_jsonl(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        out.push_str(&serde_json::to_string(f).expect("findings serialize"));
        out.push('\n');
    }
    out
}

/// The set of issue kinds present, for quick comparisons in reports.
pub fn issue_kinds(findings: &[Finding]) -> BTreeSet<StructureIssue> {
    findings.iter().filter_map(|f| f.issue).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sop::{Binding, Category, Subtask};

    fn node(id: &str, deps: &[&str], outputs: &[&str]) -> Subtask {
        let mut st = Subtask::new(id, Category::InformationProcessing);
        st.dependencies = deps.iter().map(|d| d.to_string()).collect();
        st.outputs = outputs.iter().map(|d| d.to_string()).collect();
        st
    }

    fn bind(mut st: Subtask, src: &str, out: &str, as_: &str) -> Subtask {
        st.inputs_from_dependencies.push(Binding::new(src, out, as_));
        st
    }

    #[test]
    fn binding_from_dependency_passes() {
        let sop = StructuredSop::from_subtasks([
            node("a", &[], &["mixture"]),
            bind(node("b", &["a"], &[]), "a", "mixture", "mixture"),
        ]);
        let s = deterministic_scores(&sop);
        assert_eq!(s.dependency_score, 1.0);
        assert_eq!(s.input_from_dependency_score, 1.0);
        assert!(s.findings.is_empty());
    }

    #[test]
    fn binding_from_non_dependency_fails() {
        let sop = StructuredSop::from_subtasks([
            node("a", &[], &["x"]),
            bind(node("b", &["a"], &[]), "c", "x", "x"),
        ]);
        let dep = dependency_check(&sop);
        assert_eq!(dep.score, 0.5);
        assert_eq!(dep.findings.len(), 1);
        assert_eq!(dep.findings[0].subtask_id, "b");
        assert!(dep.findings[0].detail.contains("`c`"));
        assert!(!dep.findings[0].ok);
    }

    #[test]
    fn missing_output_detail() {
        let sop = StructuredSop::from_subtasks([
            node("a", &[], &["mixture"]),
            bind(node("b", &["a"], &[]), "a", "batter", "batter"),
        ]);
        let ifd = input_from_dependency_check(&sop);
        assert_eq!(ifd.score, 0.5);
        assert_eq!(ifd.findings[0].subtask_id, "b");
        assert_eq!(ifd.findings[0].detail, "batter not in outputs(a)");
    }

    #[test]
    fn output_names_compare_normalized() {
        let sop = StructuredSop::from_subtasks([
            node("a", &[], &["Melted Butter"]),
            bind(node("b", &["a"], &[]), "a", "melted_butter", "butter"),
        ]);
        assert_eq!(input_from_dependency_check(&sop).score, 1.0);
    }

    #[test]
    fn ordering_only_dependency_passes() {
        let sop = StructuredSop::from_subtasks([node("a", &[], &["x"]), node("b", &["a"], &[])]);
        let s = deterministic_scores(&sop);
        assert_eq!((s.dependency_score, s.input_from_dependency_score), (1.0, 1.0));
    }

    #[test]
    fn empty_graph_scores_one() {
        let s = deterministic_scores(&StructuredSop::new());
        assert_eq!((s.dependency_score, s.input_from_dependency_score), (1.0, 1.0));
        assert!(structural_preflight(&StructuredSop::new()).is_empty());
    }

    #[test]
    fn valid_chain_has_no_structure_findings() {
        let sop = StructuredSop::from_subtasks([
            node("a", &[], &[]),
            node("b", &["a"], &[]),
            node("c", &["b"], &[]),
        ]);
        assert!(structural_preflight(&sop).is_empty());
    }

    #[test]
    fn island_behind_cycle() {
        // root r; cycle x <-> y; z hangs below the cycle.
        let sop = StructuredSop::from_subtasks([
            node("r", &[], &[]),
            node("x", &["y"], &[]),
            node("y", &["x"], &[]),
            node("z", &["y"], &[]),
        ]);
        let f = structural_preflight(&sop);
        let kinds = issue_kinds(&f);
        assert!(kinds.contains(&StructureIssue::Cycle));
        assert!(kinds.contains(&StructureIssue::Unreachable));
        let cyc: Vec<_> = f
            .iter()
            .filter(|f| f.issue == Some(StructureIssue::Cycle))
            .map(|f| f.subtask_id.as_str())
            .collect();
        assert_eq!(cyc, ["x", "y"]);
        let unr: Vec<_> = f
            .iter()
            .filter(|f| f.issue == Some(StructureIssue::Unreachable))
            .map(|f| f.subtask_id.as_str())
            .collect();
        assert_eq!(unr, ["z"]);
    }

    #[test]
    fn local_defects_reported() {
        let mut a = node("a", &["a", "ghost", "b", "b"], &[]);
        a.inputs.push("v".into());
        a.inputs_from_dependencies.push(Binding::new("b", "w", "V"));
        let sop = StructuredSop::from_subtasks([a, node("b", &[], &["w"])]);
        let kinds = issue_kinds(&structural_preflight(&sop));
        for k in [
            StructureIssue::SelfLoop,
            StructureIssue::DanglingReference,
            StructureIssue::DuplicateDependency,
            StructureIssue::DuplicateInputSlot,
        ] {
            assert!(kinds.contains(&k), "{k:?} missing from {kinds:?}");
        }
    }

    #[test]
    fn adding_a_violation_strictly_lowers_score() {
        let base = StructuredSop::from_subtasks([
            node("a", &[], &["x"]),
            bind(node("b", &["a"], &[]), "a", "x", "x"),
            node("c", &["b"], &[]),
        ]);
        let before = dependency_check(&base).score;
        let mut worse = base.clone();
        worse.subtasks["c"]
            .inputs_from_dependencies
            .push(Binding::new("a", "x", "y"));
        assert!(dependency_check(&worse).score < before);
    }

    #[test]
    fn jsonl_shape() {
        let f = Finding::violation("b", Check::Dependency, "d".into());
        assert_eq!(
            findings_to_jsonl(&[f]),
            "{\"subtask_id\":\"b\",\"check\":\"Dependency\",\"ok\":false,\"detail\":\"d\"}\n"
        );
    }
}
