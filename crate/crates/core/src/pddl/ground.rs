use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::problem::{Fact, MetaProblem};

pub type PropId = usize;

/// A grounded, delete-free action: it has preconditions and add effects
/// only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedAction {
    /// Flat name: `execute-<s>` or `assign-<v1>-<v2>`.
    pub name: String,
    /// Schema name and arguments, i.e. the `(execute-subtask s)` form.
    pub schema: String,
    pub args: Vec<String>,
    pub pre: Vec<PropId>,
    pub add: Vec<PropId>,
}

impl GroundedAction {
    /// `(schema arg ...)`, the form external planners print.
    pub fn pddl_form(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedTask {
    /// Proposition texts, indexed by [`PropId`].
    pub props: Vec<String>,
    pub actions: Vec<GroundedAction>,
    pub init: BTreeSet<PropId>,
    pub goal: BTreeSet<PropId>,
}

impl GroundedTask {
    pub fn prop_id(&self, text: &str) -> Option<PropId> {
        self.props.iter().position(|p| p == text)
    }

    /// Subtask symbol executed by an action, if it is an execute action.
    pub fn executed_subtask(&self, action: usize) -> Option<&str> {
        let a = &self.actions[action];
        (a.schema == "execute-subtask").then(|| a.args[0].as_str())
    }
}

/// Instantiates the two schemata over a problem. Static facts
/// (`required-input`, `subtask-output`, `map`) are compiled into the
/// actions; one `execute-<s>` per subtask and one `assign-<v1>-<v2>` per map
/// fact.
pub fn ground(p: &MetaProblem) -> GroundedTask {
    let mut props: Vec<String> = Vec::new();
    let mut index: BTreeMap<Fact, PropId> = BTreeMap::new();
    let mut intern = |f: Fact, props: &mut Vec<String>| -> PropId {
        *index.entry(f).or_insert_with_key(|f| {
            props.push(f.to_string());
            props.len() - 1
        })
    };
    for v in &p.variables {
        intern(Fact::Available(v.clone()), &mut props);
    }
    for s in &p.subtasks {
        intern(Fact::Executed(s.clone()), &mut props);
    }

    let mut required: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut produced: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut maps: Vec<(&str, &str)> = Vec::new();
    for f in &p.init {
        match f {
            Fact::RequiredInput(v, s) => required.entry(s).or_default().push(v),
            Fact::SubtaskOutput(v, s) => produced.entry(s).or_default().push(v),
            Fact::Map(a, b) => maps.push((a, b)),
            Fact::Available(_) | Fact::Executed(_) => {}
        }
    }

    let mut actions = Vec::with_capacity(p.subtasks.len() + maps.len());
    for s in &p.subtasks {
        let pre = required
            .get(s.as_str())
            .into_iter()
            .flatten()
            .map(|v| intern(Fact::Available(v.to_string()), &mut props))
            .collect();
        let mut add: Vec<PropId> = produced
            .get(s.as_str())
            .into_iter()
            .flatten()
            .map(|v| intern(Fact::Available(v.to_string()), &mut props))
            .collect();
        add.push(intern(Fact::Executed(s.clone()), &mut props));
        actions.push(GroundedAction {
            name: format!("execute-{s}"),
            schema: "execute-subtask".into(),
            args: vec![s.clone()],
            pre,
            add,
        });
    }
    for (from, to) in maps {
        let pre = vec![intern(Fact::Available(from.to_string()), &mut props)];
        let add = vec![intern(Fact::Available(to.to_string()), &mut props)];
        actions.push(GroundedAction {
            name: format!("assign-{from}-{to}"),
            schema: "assign".into(),
            args: vec![from.to_string(), to.to_string()],
            pre,
            add,
        });
    }

    // Static goal facts hold iff they are in init; fluent init facts are
    // the initial state.
    let mut init = BTreeSet::new();
    for f in p.init.iter().filter(|f| f.is_fluent()) {
        init.insert(intern(f.clone(), &mut props));
    }
    let mut goal = BTreeSet::new();
    for f in &p.goal {
        let id = intern(f.clone(), &mut props);
        if !f.is_fluent() && p.init.contains(f) {
            init.insert(id);
        }
        goal.insert(id);
    }
    GroundedTask {
        props,
        actions,
        init,
        goal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::generate_problem;
    use crate::sop::{Binding, Category, StructuredSop, Subtask};

    #[test]
    fn one_subtask_one_action() {
        let mut st = Subtask::new("s1", Category::Knowledge);
        st.inputs = vec!["x".into()];
        st.outputs = vec!["y".into()];
        let (p, _) = generate_problem(&StructuredSop::from_subtasks([st])).unwrap();
        let t = ground(&p);
        assert_eq!(t.actions.len(), 1);
        let a = &t.actions[0];
        assert_eq!(a.name, "execute-s1");
        assert_eq!(a.pddl_form(), "(execute-subtask s1)");
        assert_eq!(a.pre, vec![t.prop_id("(available x)").unwrap()]);
        let mut add = a.add.clone();
        add.sort();
        let mut want = vec![
            t.prop_id("(available y)").unwrap(),
            t.prop_id("(executed s1)").unwrap(),
        ];
        want.sort();
        assert_eq!(add, want);
        assert_eq!(t.init, BTreeSet::from([t.prop_id("(available x)").unwrap()]));
    }

    #[test]
    fn one_assign_per_map_fact() {
        let mut a = Subtask::new("a", Category::Knowledge);
        a.outputs = vec!["p".into(), "q".into(), "r".into()];
        let mut b = Subtask::new("b", Category::Knowledge);
        b.dependencies = vec!["a".into()];
        b.inputs_from_dependencies = vec![
            Binding::new("a", "p", "p2"),
            Binding::new("a", "q", "q2"),
            Binding::new("a", "r", "r2"),
        ];
        let (p, _) = generate_problem(&StructuredSop::from_subtasks([a, b])).unwrap();
        let t = ground(&p);
        assert_eq!(t.actions.iter().filter(|a| a.schema == "assign").count(), 3);
        assert_eq!(t.actions.len(), 5);
    }
}
