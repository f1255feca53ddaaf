use std::collections::{BTreeSet, HashMap};

use super::{normalize_var, GraphErrorKind, SopError, StructuredSop};

/// Kahn's algorithm; among ready subtasks the lexicographically smallest id
/// goes first. Fails on dangling dependencies, self loops and cycles (with a
/// witness cycle).
pub fn topological_order(sop: &StructuredSop) -> Result<Vec<String>, SopError> {
    let mut indegree: HashMap<&str, usize> = HashMap::with_capacity(sop.len());
    let mut children: HashMap<&str, Vec<&str>> = HashMap::with_capacity(sop.len());
    for st in sop.iter() {
        indegree.entry(&st.id).or_insert(0);
        for dep in &st.dependencies {
            if dep == &st.id {
                return Err(SopError::graph(
                    GraphErrorKind::SelfLoop,
                    &st.id,
                    "lists itself as a dependency".to_string(),
                ));
            }
            if !sop.subtasks.contains_key(dep) {
                return Err(SopError::graph(
                    GraphErrorKind::DanglingReference,
                    &st.id,
                    format!("dependency `{dep}` does not exist"),
                ));
            }
            *indegree.entry(&st.id).or_insert(0) += 1;
            children.entry(dep.as_str()).or_default().push(&st.id);
        }
    }

    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut order = Vec::with_capacity(sop.len());
    while let Some(id) = ready.pop_first() {
        order.push(id.to_string());
        for child in children.get(id).into_iter().flatten() {
            let d = indegree.get_mut(child).expect("child is a known subtask");
            *d -= 1;
            if *d == 0 {
                ready.insert(child);
            }
        }
    }
    if order.len() == sop.len() {
        return Ok(order);
    }

    let remaining: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, d)| **d > 0)
        .map(|(id, _)| *id)
        .collect();
    let witness = cycle_witness(sop, &remaining);
    Err(SopError::Graph {
        kind: GraphErrorKind::Cycle,
        subtask: witness[0].clone(),
        detail: format!("cycle {}", witness.join(" -> ")),
        witness,
    })
}

/// Every subtask left over by Kahn's algorithm has a leftover parent, so
/// walking parents from any of them must revisit a node. The cycle is
/// returned in dependency order, rotated to start at its smallest id.
fn cycle_witness(sop: &StructuredSop, remaining: &BTreeSet<&str>) -> Vec<String> {
    let start = *remaining.first().expect("a cycle leaves subtasks behind");
    let mut path: Vec<&str> = Vec::new();
    let mut cur = start;
    loop {
        if let Some(pos) = path.iter().position(|n| *n == cur) {
            // path[pos..] walks parent links; reverse to get edge direction.
            let mut cycle: Vec<&str> = path[pos..].iter().rev().copied().collect();
            let min = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, id)| **id)
                .map(|(i, _)| i)
                .unwrap_or(0);
            cycle.rotate_left(min);
            return cycle.into_iter().map(str::to_string).collect();
        }
        path.push(cur);
        cur = sop.subtasks[cur]
            .dependencies
            .iter()
            .map(String::as_str)
            .filter(|d| remaining.contains(d))
            .min()
            .expect("leftover subtask has a leftover parent");
    }
}

/// Union of every subtask's `inputs`, normalized.
pub fn initial_state(sop: &StructuredSop) -> BTreeSet<String> {
    sop.iter()
        .flat_map(|st| st.inputs.iter())
        .map(|v| normalize_var(v))
        .collect()
}

/// Outputs that no binding consumes: `v` produced by `s` is a goal unless
/// some binding names `(s, v)` as its source.
pub fn goal_state(sop: &StructuredSop) -> BTreeSet<String> {
    let consumed: BTreeSet<(&str, String)> = sop
        .iter()
        .flat_map(|st| st.inputs_from_dependencies.iter())
        .map(|b| (b.source_subtask.as_str(), normalize_var(&b.source_output)))
        .collect();
    sop.iter()
        .flat_map(|st| st.outputs.iter().map(move |v| (st.id.as_str(), normalize_var(v))))
        .filter(|(id, v)| !consumed.contains(&(*id, v.clone())))
        .map(|(_, v)| v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sop::{Binding, Category, Subtask};

    fn node(id: &str, deps: &[&str]) -> Subtask {
        let mut st = Subtask::new(id, Category::InformationProcessing);
        st.dependencies = deps.iter().map(|d| d.to_string()).collect();
        st
    }

    #[test]
    fn chain_has_unique_order() {
        let sop = StructuredSop::from_subtasks([node("c", &["b"]), node("b", &["a"]), node("a", &[])]);
        assert_eq!(topological_order(&sop).unwrap(), ["a", "b", "c"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let sop = StructuredSop::from_subtasks([
            node("z", &[]),
            node("m", &["z"]),
            node("b", &[]),
            node("a", &["z"]),
        ]);
        assert_eq!(topological_order(&sop).unwrap(), ["b", "z", "a", "m"]);
    }

    #[test]
    fn two_cycle_witness() {
        let sop = StructuredSop::from_subtasks([node("a", &["b"]), node("b", &["a"])]);
        match topological_order(&sop).unwrap_err() {
            SopError::Graph { kind, witness, subtask, .. } => {
                assert_eq!(kind, GraphErrorKind::Cycle);
                assert_eq!(witness, ["a", "b"]);
                assert_eq!(subtask, "a");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn witness_skips_downstream_nodes() {
        // d hangs below the cycle b -> c -> b; it must not be in the witness.
        let sop = StructuredSop::from_subtasks([
            node("a", &[]),
            node("b", &["a", "c"]),
            node("c", &["b"]),
            node("d", &["c"]),
        ]);
        match topological_order(&sop).unwrap_err() {
            SopError::Graph { witness, .. } => assert_eq!(witness, ["b", "c"]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn three_cycle_in_edge_order() {
        // edges x -> y -> w -> x (child lists parent)
        let sop = StructuredSop::from_subtasks([node("y", &["x"]), node("w", &["y"]), node("x", &["w"])]);
        match topological_order(&sop).unwrap_err() {
            SopError::Graph { witness, .. } => assert_eq!(witness, ["w", "x", "y"]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn state_extractors() {
        let mut a = Subtask::new("a", Category::HumanInput);
        a.inputs = vec!["Corn".into(), "egg".into()];
        a.outputs = vec!["mixture".into(), "Spare Egg".into()];
        let mut b = Subtask::new("b", Category::InformationProcessing);
        b.dependencies = vec!["a".into()];
        b.inputs = vec!["egg".into()];
        b.inputs_from_dependencies = vec![Binding::new("a", "Mixture", "batter")];
        b.outputs = vec!["cake".into()];
        let sop = StructuredSop::from_subtasks([a, b]);
        assert_eq!(
            initial_state(&sop).into_iter().collect::<Vec<_>>(),
            ["corn", "egg"]
        );
        assert_eq!(
            goal_state(&sop).into_iter().collect::<Vec<_>>(),
            ["cake", "spare_egg"]
        );
    }

    #[test]
    fn childless_outputs_are_goals() {
        let mut a = Subtask::new("a", Category::Decision);
        a.outputs = vec!["x".into(), "y".into()];
        let sop = StructuredSop::from_subtasks([a]);
        assert_eq!(goal_state(&sop).len(), 2);
    }
}
