//! Traversability of the meta-planning problem.
//!
//! The grounded meta problem is delete-free, so plan existence is decided by
//! a reachability fixpoint ([`solve`]) rather than by search. The
//! breadth-first search in [`bfs`] is the exhaustive reference used to
//! cross-check it on small tasks.

pub mod bfs;
mod fixpoint;
mod validate;

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

pub use fixpoint::solve;
pub use validate::{parse_plan_file, validate_plan, PlanValidation};

use crate::pddl::{generate_problem, ground, GroundedTask, MetaProblem, SymbolKind, SymbolTable};
use crate::sop::StructuredSop;
use crate::validators::{structural_preflight, Finding};

/// Grounded action names in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<String>,
}

impl Plan {
    /// One action per line, the format [`parse_plan_file`] reads.
    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// An action blocked by exactly one missing precondition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearMiss {
    pub action: String,
    pub missing: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unsolvable {
    /// Goal propositions outside the reachable set.
    pub unreached_goals: Vec<String>,
    /// Actions that never became applicable.
    pub unfireable_actions: Vec<String>,
    pub near_misses: Vec<NearMiss>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PlanOutcome {
    Solved(Plan),
    Unsolvable(Unsolvable),
}

impl PlanOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, PlanOutcome::Solved(_))
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            PlanOutcome::Solved(p) => Some(p),
            PlanOutcome::Unsolvable(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Delete-free reachability fixpoint.
    #[default]
    Fixpoint,
    /// Exhaustive breadth-first search, bounded by a state budget.
    BreadthFirst { max_states: usize },
}

/// Solves with the chosen strategy. Breadth-first search returns `None`
/// when it runs out of state budget.
pub fn solve_with(task: &GroundedTask, strategy: Strategy) -> Option<PlanOutcome> {
    match strategy {
        Strategy::Fixpoint => Some(solve(task)),
        Strategy::BreadthFirst { max_states } => {
            let res = bfs::breadth_first(task, max_states)?;
            Some(match res.plan {
                Some(steps) => PlanOutcome::Solved(Plan {
                    steps: steps.iter().map(|a| task.actions[*a].name.clone()).collect(),
                }),
                // Reachability gives the exact diagnostics either way.
                None => solve(task),
            })
        }
    }
}

/// Structured Plan Score of one graph, with what is needed to explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanScore {
    /// 1 iff a plan traverses the graph.
    pub score: u8,
    /// `None` when preflight or problem generation failed.
    pub outcome: Option<PlanOutcome>,
    pub preflight: Vec<Finding>,
    /// Ids of subtasks that could never execute.
    pub blocked_subtasks: Vec<String>,
    pub error: Option<String>,
}

/// Generates the meta problem, grounds it and solves it. Graphs that fail
/// structural preflight score 0 without being planned.
pub fn structured_plan_score(sop: &StructuredSop) -> PlanScore {
    let preflight = structural_preflight(sop);
    if !preflight.is_empty() {
        let mut blocked: Vec<String> = preflight.iter().map(|f| f.subtask_id.clone()).collect();
        blocked.sort();
        blocked.dedup();
        return PlanScore {
            score: 0,
            outcome: None,
            preflight,
            blocked_subtasks: blocked,
            error: Some("structural preflight failed".into()),
        };
    }
    let (problem, symbols) = match generate_problem(sop) {
        Ok(x) => x,
        Err(e) => {
            return PlanScore {
                score: 0,
                outcome: None,
                preflight,
                blocked_subtasks: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    };
    score_problem(sop, &problem, &symbols)
}

/// Plans an already generated problem for `sop`. Used directly when the
/// problem has been edited after generation.
pub fn score_problem(sop: &StructuredSop, problem: &MetaProblem, symbols: &SymbolTable) -> PlanScore {
    let task = ground(problem);
    let outcome = match solve(&task) {
        PlanOutcome::Solved(plan) => {
            PlanOutcome::Solved(order_by_dependencies(&task, plan, sop, |id| {
                symbols.symbol(SymbolKind::Subtask, id).map(str::to_string)
            }))
        }
        unsolved => unsolved,
    };
    let blocked_subtasks = match &outcome {
        PlanOutcome::Solved(_) => Vec::new(),
        PlanOutcome::Unsolvable(u) => task
            .actions
            .iter()
            .enumerate()
            .filter(|(_, a)| u.unfireable_actions.contains(&a.name))
            .filter_map(|(i, _)| task.executed_subtask(i))
            .filter_map(|sym| match symbols.original(sym) {
                Some((SymbolKind::Subtask, id)) => Some(id.to_string()),
                _ => None,
            })
            .collect(),
    };
    PlanScore {
        score: u8::from(outcome.is_solved()),
        outcome: Some(outcome),
        preflight: Vec::new(),
        blocked_subtasks,
        error: None,
    }
}

/// Reorders a valid plan so that, where possible, every subtask's execute
/// step also follows the execute steps of its declared dependencies.
///
/// Constraints are the causal links of the plan (each precondition after
/// the earliest step adding it) plus dependency edges between executed
/// subtasks; ties keep the original order. If the two sets of constraints
/// conflict the plan is returned unchanged.
fn order_by_dependencies(
    task: &GroundedTask,
    plan: Plan,
    sop: &StructuredSop,
    subtask_symbol: impl Fn(&str) -> Option<String>,
) -> Plan {
    let n = plan.steps.len();
    let index_of: HashMap<&str, usize> = task
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    let actions: Vec<usize> = plan.steps.iter().map(|s| index_of[s.as_str()]).collect();

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, &a) in actions.iter().enumerate() {
        for p in &task.actions[a].pre {
            if task.init.contains(p) {
                continue;
            }
            if let Some(j) = (0..i).find(|&j| task.actions[actions[j]].add.contains(p)) {
                edges.insert((j, i));
            }
        }
    }
    let step_of_subtask: HashMap<String, usize> = (0..n)
        .filter_map(|i| task.executed_subtask(actions[i]).map(|s| (s.to_string(), i)))
        .collect();
    for st in sop.iter() {
        let Some(child) = subtask_symbol(&st.id).and_then(|s| step_of_subtask.get(&s).copied()) else {
            continue;
        };
        for dep in &st.dependencies {
            if let Some(parent) = subtask_symbol(dep).and_then(|s| step_of_subtask.get(&s).copied()) {
                edges.insert((parent, child));
            }
        }
    }

    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &edges {
        indegree[b] += 1;
        succ[a].push(b);
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|i| indegree[*i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    if order.len() < n {
        return plan;
    }
    Plan {
        steps: order.into_iter().map(|i| plan.steps[i].clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{generate_problem, ground};
    use crate::sop::{Binding, Category, Subtask};

    fn chain() -> StructuredSop {
        let mut a = Subtask::new("a", Category::HumanInput);
        a.inputs = vec!["x".into()];
        a.outputs = vec!["ya".into()];
        let mut b = Subtask::new("b", Category::InformationProcessing);
        b.dependencies = vec!["a".into()];
        b.inputs_from_dependencies = vec![Binding::new("a", "ya", "ya")];
        b.outputs = vec!["yb".into()];
        let mut c = Subtask::new("c", Category::Decision);
        c.dependencies = vec!["b".into()];
        c.inputs_from_dependencies = vec![Binding::new("b", "yb", "yb")];
        c.outputs = vec!["yc".into()];
        StructuredSop::from_subtasks([c, a, b])
    }

    fn task_of(sop: &StructuredSop) -> GroundedTask {
        ground(&generate_problem(sop).unwrap().0)
    }

    #[test]
    fn chain_solves_in_order() {
        let task = task_of(&chain());
        let PlanOutcome::Solved(plan) = solve(&task) else {
            panic!("chain must be solvable")
        };
        assert_eq!(plan.steps, ["execute-a", "execute-b", "execute-c"]);
        assert!(validate_plan(&task, &plan).valid);
    }

    #[test]
    fn missing_input_is_unsolvable() {
        let mut sop = chain();
        sop.subtasks["b"].inputs_from_dependencies[0] = Binding::new("a", "nothing", "batter");
        let task = task_of(&sop);
        let PlanOutcome::Unsolvable(u) = solve(&task) else {
            panic!("expected unsolvable")
        };
        assert!(u.unreached_goals.contains(&"(executed b)".to_string()));
        assert!(u.unfireable_actions.contains(&"execute-b".to_string()));
        assert!(u.near_misses.iter().any(|m| m.action == "assign-nothing-batter"));
    }

    #[test]
    fn reversed_plan_fails_at_step_one() {
        let task = task_of(&chain());
        let plan = Plan {
            steps: vec!["execute-c".into(), "execute-b".into(), "execute-a".into()],
        };
        let v = validate_plan(&task, &plan);
        assert!(!v.valid);
        assert_eq!(v.failed_step, Some(1));
        assert!(v.diagnostic.starts_with("step 1:"), "{}", v.diagnostic);
    }

    #[test]
    fn empty_plan_valid_when_goal_in_init() {
        let task = task_of(&StructuredSop::new());
        assert!(validate_plan(&task, &Plan::default()).valid);
    }

    #[test]
    fn pddl_form_steps_accepted() {
        let task = task_of(&chain());
        let plan = parse_plan_file(
            "; found by an external planner\n0: ( EXECUTE-SUBTASK a )  [1]\n(execute-subtask b)\n\n execute-c \n; cost = 3\n",
        );
        assert_eq!(plan.steps, ["(execute-subtask a)", "(execute-subtask b)", "execute-c"]);
        assert!(validate_plan(&task, &plan).valid);
    }

    #[test]
    fn unknown_step() {
        let task = task_of(&chain());
        let v = validate_plan(&task, &Plan { steps: vec!["fly".into()] });
        assert_eq!(v.failed_step, Some(1));
    }

    #[test]
    fn score_for_chain_and_empty() {
        assert_eq!(structured_plan_score(&chain()).score, 1);
        let empty = structured_plan_score(&StructuredSop::new());
        assert_eq!(empty.score, 1);
        assert_eq!(empty.outcome.unwrap().plan().unwrap().steps.len(), 0);
    }

    #[test]
    fn preflight_failure_scores_zero() {
        let mut sop = chain();
        sop.subtasks["a"].dependencies.push("c".into());
        let s = structured_plan_score(&sop);
        assert_eq!(s.score, 0);
        assert!(s.outcome.is_none());
        assert!(!s.preflight.is_empty());
    }

    #[test]
    fn ordering_only_dependency_respected_in_plan() {
        // b depends on a only for ordering; nothing forces the order causally.
        let mut a = Subtask::new("a", Category::HumanInput);
        a.inputs = vec!["x".into()];
        a.outputs = vec!["done".into()];
        let mut b = Subtask::new("b", Category::HumanInput);
        b.dependencies = vec!["a".into()];
        b.outputs = vec!["other".into()];
        let sop = StructuredSop::from_subtasks([a, b]);
        let s = structured_plan_score(&sop);
        let plan = s.outcome.unwrap().plan().unwrap().clone();
        // b has no preconditions and fires first in the fixpoint.
        assert_eq!(plan.steps, ["execute-a", "execute-b"]);
    }

    #[test]
    fn bfs_agrees_on_chain() {
        let task = task_of(&chain());
        let res = bfs::breadth_first(&task, 10_000).unwrap();
        assert_eq!(res.plan.unwrap().len(), 3);
        let out = solve_with(&task, Strategy::BreadthFirst { max_states: 10_000 }).unwrap();
        assert!(validate_plan(&task, out.plan().unwrap()).valid);
    }
}
