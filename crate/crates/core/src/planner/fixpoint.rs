use std::collections::{BTreeSet, VecDeque};

use super::{NearMiss, Plan, PlanOutcome, Unsolvable};
use crate::pddl::{GroundedTask, PropId};

/// Monotone reachability for delete-free tasks.
///
/// Each action keeps a counter of unsatisfied preconditions; reaching a
/// proposition decrements the counters of the actions watching it and an
/// action fires when its counter hits zero. Linear in the total size of
/// precondition and effect lists. The plan keeps only the firings needed to
/// support the goal, walking back from goal facts through the first action
/// that reached each fact.
pub fn solve(task: &GroundedTask) -> PlanOutcome {
    let run = saturate(task);
    let unreached: Vec<PropId> = task
        .goal
        .iter()
        .copied()
        .filter(|g| !run.reached[*g])
        .collect();
    if unreached.is_empty() {
        return PlanOutcome::Solved(extract(task, &run));
    }

    let fired: BTreeSet<usize> = run.fired.iter().copied().collect();
    let mut near_misses = Vec::new();
    let mut unfireable = Vec::new();
    for (i, a) in task.actions.iter().enumerate() {
        if fired.contains(&i) {
            continue;
        }
        unfireable.push(a.name.clone());
        let missing: BTreeSet<PropId> = a.pre.iter().copied().filter(|p| !run.reached[*p]).collect();
        if missing.len() == 1 {
            let m = *missing.first().unwrap();
            near_misses.push(NearMiss {
                action: a.name.clone(),
                missing: task.props[m].clone(),
            });
        }
    }
    PlanOutcome::Unsolvable(Unsolvable {
        unreached_goals: unreached.iter().map(|g| task.props[*g].clone()).collect(),
        unfireable_actions: unfireable,
        near_misses,
    })
}

pub(crate) struct Saturation {
    pub reached: Vec<bool>,
    /// First action that reached each proposition.
    pub achiever: Vec<Option<usize>>,
    /// Actions in firing order.
    pub fired: Vec<usize>,
}

pub(crate) fn saturate(task: &GroundedTask) -> Saturation {
    let n_props = task.props.len();
    let mut reached = vec![false; n_props];
    let mut achiever = vec![None; n_props];
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); n_props];
    let mut remaining: Vec<usize> = Vec::with_capacity(task.actions.len());
    for (i, a) in task.actions.iter().enumerate() {
        let pre: BTreeSet<PropId> = a.pre.iter().copied().collect();
        for p in &pre {
            watchers[*p].push(i);
        }
        remaining.push(pre.len());
    }

    let mut queue = VecDeque::new();
    for &p in &task.init {
        if !reached[p] {
            reached[p] = true;
            queue.push_back(p);
        }
    }
    let mut fired = Vec::new();
    let mut fire = |a: usize, reached: &mut Vec<bool>, queue: &mut VecDeque<PropId>| {
        fired.push(a);
        for &q in &task.actions[a].add {
            if !reached[q] {
                reached[q] = true;
                achiever[q] = Some(a);
                queue.push_back(q);
            }
        }
    };
    for (a, _) in remaining.iter().enumerate().filter(|(_, n)| **n == 0) {
        fire(a, &mut reached, &mut queue);
    }
    while let Some(p) = queue.pop_front() {
        for &a in &watchers[p] {
            remaining[a] -= 1;
            if remaining[a] == 0 {
                fire(a, &mut reached, &mut queue);
            }
        }
    }
    Saturation {
        reached,
        achiever,
        fired,
    }
}

fn extract(task: &GroundedTask, run: &Saturation) -> Plan {
    let mut needed = vec![false; task.actions.len()];
    let mut stack: Vec<PropId> = task
        .goal
        .iter()
        .copied()
        .filter(|g| !task.init.contains(g))
        .collect();
    while let Some(p) = stack.pop() {
        let a = run.achiever[p].expect("reached non-initial facts have an achiever");
        if needed[a] {
            continue;
        }
        needed[a] = true;
        stack.extend(task.actions[a].pre.iter().copied().filter(|q| !task.init.contains(q)));
    }
    Plan {
        steps: run
            .fired
            .iter()
            .filter(|a| needed[**a])
            .map(|a| task.actions[*a].name.clone())
            .collect(),
    }
}
