use serde::{Deserialize, Serialize};

use super::Plan;
use crate::pddl::GroundedTask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanValidation {
    pub valid: bool,
    /// 1-based index of the first failing step; `None` when the plan is
    /// valid or only the goal check failed.
    pub failed_step: Option<usize>,
    pub diagnostic: String,
}

/// Simulates `plan` from the initial state. Steps may use flat action names
/// (`execute-s1`) or the PDDL form (`(execute-subtask s1)`).
pub fn validate_plan(task: &GroundedTask, plan: &Plan) -> PlanValidation {
    let mut state = vec![false; task.props.len()];
    for &p in &task.init {
        state[p] = true;
    }
    for (i, step) in plan.steps.iter().enumerate() {
        let candidates = resolve(task, step);
        if candidates.is_empty() {
            return PlanValidation {
                valid: false,
                failed_step: Some(i + 1),
                diagnostic: format!("step {}: unknown action `{step}`", i + 1),
            };
        }
        let applicable = candidates
            .iter()
            .copied()
            .find(|a| task.actions[*a].pre.iter().all(|p| state[*p]));
        let Some(a) = applicable else {
            let action = &task.actions[candidates[0]];
            let missing: Vec<&str> = action
                .pre
                .iter()
                .filter(|p| !state[**p])
                .map(|p| task.props[*p].as_str())
                .collect();
            return PlanValidation {
                valid: false,
                failed_step: Some(i + 1),
                diagnostic: format!(
                    "step {}: `{}` is not applicable, missing {}",
                    i + 1,
                    action.name,
                    missing.join(", ")
                ),
            };
        };
        for &q in &task.actions[a].add {
            state[q] = true;
        }
    }
    let unmet: Vec<&str> = task
        .goal
        .iter()
        .filter(|g| !state[**g])
        .map(|g| task.props[*g].as_str())
        .collect();
    if unmet.is_empty() {
        PlanValidation {
            valid: true,
            failed_step: None,
            diagnostic: format!("plan of {} steps reaches the goal", plan.steps.len()),
        }
    } else {
        PlanValidation {
            valid: false,
            failed_step: None,
            diagnostic: format!("goal not reached: {}", unmet.join(", ")),
        }
    }
}

/// Action indices a plan step may refer to, in task order.
fn resolve(task: &GroundedTask, step: &str) -> Vec<usize> {
    let key = canonical_step(step);
    task.actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.name == key || a.pddl_form() == key)
        .map(|(i, _)| i)
        .collect()
}

/// Lowercased with whitespace collapsed, and single spaces inside
/// parentheses trimmed: `( Execute-Subtask  s1 )` becomes
/// `(execute-subtask s1)`.
pub(crate) fn canonical_step(step: &str) -> String {
    let joined = step
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    joined.replace("( ", "(").replace(" )", ")")
}

/// Reads a plan file: one action per line, either as a flat name or in
/// parenthesized PDDL form. Blank lines and `;` comments are skipped; an
/// optional `N:` step prefix and a trailing `[duration]` are ignored.
pub fn parse_plan_file(text: &str) -> Plan {
    let mut steps = Vec::new();
    for line in text.lines() {
        let line = line.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut body = line;
        if let Some((prefix, rest)) = body.split_once(':') {
            if prefix.trim().parse::<f64>().is_ok() {
                body = rest.trim();
            }
        }
        if let Some(open) = body.rfind('[') {
            if body.ends_with(']') {
                body = body[..open].trim();
            }
        }
        steps.push(canonical_step(body));
    }
    Plan { steps }
}
