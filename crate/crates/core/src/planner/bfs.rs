//! Uninformed breadth-first search over STRIPS states. Exponential; kept
//! as an independent reference for the fixpoint solver on small tasks.

use std::collections::{HashMap, VecDeque};

use crate::pddl::GroundedTask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsResult {
    /// Shortest plan as action indices, if the goal is reachable.
    pub plan: Option<Vec<usize>>,
    pub states_expanded: usize,
}

type State = Vec<u64>;

fn has(s: &State, p: usize) -> bool {
    s[p / 64] & (1 << (p % 64)) != 0
}

fn set(s: &mut State, p: usize) {
    s[p / 64] |= 1 << (p % 64);
}

/// Returns `None` when more than `max_states` states would be stored.
pub fn breadth_first(task: &GroundedTask, max_states: usize) -> Option<BfsResult> {
    let words = task.props.len().div_ceil(64).max(1);
    let mut start = vec![0u64; words];
    for &p in &task.init {
        set(&mut start, p);
    }
    let goal_met = |s: &State| task.goal.iter().all(|g| has(s, *g));

    // state -> (parent state index, action)
    let mut states: Vec<State> = vec![start.clone()];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut seen: HashMap<State, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([0usize]);
    let mut expanded = 0;

    while let Some(idx) = queue.pop_front() {
        if goal_met(&states[idx]) {
            let mut plan = Vec::new();
            let mut cur = idx;
            while let Some((prev, a)) = parent[cur] {
                plan.push(a);
                cur = prev;
            }
            plan.reverse();
            return Some(BfsResult {
                plan: Some(plan),
                states_expanded: expanded,
            });
        }
        expanded += 1;
        for (a, action) in task.actions.iter().enumerate() {
            let s = &states[idx];
            if !action.pre.iter().all(|p| has(s, *p)) {
                continue;
            }
            let mut next = s.clone();
            for &q in &action.add {
                set(&mut next, q);
            }
            if seen.contains_key(&next) {
                continue;
            }
            if states.len() >= max_states {
                return None;
            }
            seen.insert(next.clone(), states.len());
            states.push(next);
            parent.push(Some((idx, a)));
            queue.push_back(states.len() - 1);
        }
    }
    Some(BfsResult {
        plan: None,
        states_expanded: expanded,
    })
}
