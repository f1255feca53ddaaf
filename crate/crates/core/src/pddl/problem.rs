use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use super::domain::{expect_symbol, list, parse_formula, symbol, typed_list, Formula, DOMAIN_NAME};
use super::sexpr::{self, Sexpr};
use super::symbols::{SymbolKind, SymbolTable};
use super::PddlError;
use crate::sop::{initial_state, normalize_var, StructuredSop};

/// A ground fact of the meta domain.
///
/// Variants are declared in alphabetical order of their predicate names and
/// symbols only use `[a-z0-9-]`, so the derived ordering coincides with the
/// lexicographic order of the rendered text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Available(String),
    Executed(String),
    Map(String, String),
    RequiredInput(String, String),
    SubtaskOutput(String, String),
}

impl Fact {
    pub fn predicate(&self) -> &'static str {
        match self {
            Fact::Available(_) => "available",
            Fact::Executed(_) => "executed",
            Fact::Map(..) => "map",
            Fact::RequiredInput(..) => "required-input",
            Fact::SubtaskOutput(..) => "subtask-output",
        }
    }

    pub fn args(&self) -> Vec<&str> {
        match self {
            Fact::Available(a) | Fact::Executed(a) => vec![a],
            Fact::Map(a, b) | Fact::RequiredInput(a, b) | Fact::SubtaskOutput(a, b) => vec![a, b],
        }
    }

    /// True for the predicates actions can change.
    pub fn is_fluent(&self) -> bool {
        matches!(self, Fact::Available(_) | Fact::Executed(_))
    }

    fn from_atom(predicate: &str, args: &[String]) -> Option<Fact> {
        let a = |i: usize| args[i].clone();
        Some(match (predicate, args.len()) {
            ("available", 1) => Fact::Available(a(0)),
            ("executed", 1) => Fact::Executed(a(0)),
            ("map", 2) => Fact::Map(a(0), a(1)),
            ("required-input", 2) => Fact::RequiredInput(a(0), a(1)),
            ("subtask-output", 2) => Fact::SubtaskOutput(a(0), a(1)),
            _ => return None,
        })
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate())?;
        for a in self.args() {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A problem over the meta domain. All names are PDDL symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaProblem {
    pub name: String,
    pub domain: String,
    pub variables: BTreeSet<String>,
    pub subtasks: BTreeSet<String>,
    pub init: BTreeSet<Fact>,
    pub goal: BTreeSet<Fact>,
}

impl MetaProblem {
    pub fn new(name: impl Into<String>) -> Self {
        MetaProblem {
            name: name.into(),
            domain: DOMAIN_NAME.to_string(),
            variables: BTreeSet::new(),
            subtasks: BTreeSet::new(),
            init: BTreeSet::new(),
            goal: BTreeSet::new(),
        }
    }

    /// Facts in init or goal that mention an undeclared object or use an
    /// argument of the wrong type.
    pub fn undeclared_symbols(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for fact in self.init.iter().chain(&self.goal) {
            let (vars, subs): (Vec<&str>, Vec<&str>) = match fact {
                Fact::Available(v) => (vec![v], vec![]),
                Fact::Executed(s) => (vec![], vec![s]),
                Fact::Map(a, b) => (vec![a, b], vec![]),
                Fact::RequiredInput(v, s) | Fact::SubtaskOutput(v, s) => (vec![v], vec![s]),
            };
            for v in vars {
                if !self.variables.contains(v) {
                    bad.push(v.to_string());
                }
            }
            for s in subs {
                if !self.subtasks.contains(s) {
                    bad.push(s.to_string());
                }
            }
        }
        bad.sort();
        bad.dedup();
        bad
    }
}

/// Builds the per-graph problem. Objects are every subtask and every
/// variable; the initial state makes the graph's initial variables
/// available and records required inputs, outputs and name mappings; the
/// goal asks for every output to be available and every subtask executed.
pub fn generate_problem(sop: &StructuredSop) -> Result<(MetaProblem, SymbolTable), PddlError> {
    let mut table = SymbolTable::new();
    for st in sop.iter() {
        table.intern(SymbolKind::Subtask, &st.id)?;
    }
    for st in sop.iter() {
        let names = st
            .inputs
            .iter()
            .chain(st.inputs_from_dependencies.iter().flat_map(|b| [&b.source_output, &b.bound_as]))
            .chain(st.outputs.iter());
        for name in names {
            table.intern(SymbolKind::Variable, &normalize_var(name))?;
        }
    }
    let var = |name: &str| -> String {
        table
            .symbol(SymbolKind::Variable, &normalize_var(name))
            .expect("every variable was interned")
            .to_string()
    };
    let sub = |id: &str| -> String {
        table
            .symbol(SymbolKind::Subtask, id)
            .expect("every subtask was interned")
            .to_string()
    };

    let problem_name = sop
        .source_ref
        .as_ref()
        .and_then(|r| r.doc_id.as_deref())
        .map(super::symbols::sanitize)
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "sop".to_string());
    let mut p = MetaProblem::new(problem_name);
    for (kind, _, symbol) in table.iter() {
        match kind {
            SymbolKind::Subtask => p.subtasks.insert(symbol.to_string()),
            SymbolKind::Variable => p.variables.insert(symbol.to_string()),
        };
    }

    for v in initial_state(sop) {
        p.init.insert(Fact::Available(var(&v)));
    }
    for st in sop.iter() {
        let s = sub(&st.id);
        for v in st.required_variables() {
            p.init.insert(Fact::RequiredInput(var(&v), s.clone()));
        }
        for o in &st.outputs {
            p.init.insert(Fact::SubtaskOutput(var(o), s.clone()));
            p.goal.insert(Fact::Available(var(o)));
        }
        for b in &st.inputs_from_dependencies {
            let (from, to) = (var(&b.source_output), var(&b.bound_as));
            if from != to {
                p.init.insert(Fact::Map(from, to));
            }
        }
        p.goal.insert(Fact::Executed(s));
    }
    Ok((p, table))
}

/// Canonical problem text: objects, init and goal each in lexicographic
/// order, one entry per line.
pub fn emit_problem(p: &MetaProblem) -> String {
    let mut objects: Vec<(&str, &str)> = p
        .variables
        .iter()
        .map(|v| (v.as_str(), "variable"))
        .chain(p.subtasks.iter().map(|s| (s.as_str(), "subtask")))
        .collect();
    objects.sort_unstable();

    let mut out = String::new();
    writeln!(out, "(define (problem {})", p.name).unwrap();
    writeln!(out, "  (:domain {})", p.domain).unwrap();
    section(&mut out, "  (:objects", objects.iter().map(|(o, t)| format!("{o} - {t}")));
    out.push('\n');
    section(&mut out, "  (:init", p.init.iter().map(Fact::to_string));
    out.push('\n');
    section(&mut out, "  (:goal (and", p.goal.iter().map(Fact::to_string));
    out.push_str("))\n");
    out
}

fn section(out: &mut String, open: &str, lines: impl Iterator<Item = String>) {
    out.push_str(open);
    for line in lines {
        out.push_str("\n    ");
        out.push_str(&line);
    }
    out.push(')');
}

pub fn parse_problem(text: &str) -> Result<MetaProblem, PddlError> {
    let root = sexpr::read(text)?;
    let items = list(&root, "problem definition")?;
    expect_symbol(items.first(), &root, "define")?;
    let header = items
        .get(1)
        .ok_or_else(|| root.error("expected `(problem <name>)`"))?;
    let h = list(header, "`(problem <name>)`")?;
    if h.len() != 2 || h[0].as_symbol() != Some("problem") {
        return Err(header.error("expected `(problem <name>)`"));
    }
    let mut p = MetaProblem::new(symbol(&h[1], "problem name")?);
    p.domain.clear();
    let mut seen_goal = false;

    for section in &items[2..] {
        let parts = list(section, "problem section")?;
        match section.head() {
            Some(":domain") => {
                if parts.len() != 2 {
                    return Err(section.error("expected `(:domain <name>)`"));
                }
                p.domain = symbol(&parts[1], "domain name")?.to_string();
            }
            Some(":objects") => {
                for obj in typed_list(&parts[1..])? {
                    let inserted = match obj.ty.as_str() {
                        "variable" => p.variables.insert(obj.name.clone()),
                        "subtask" => p.subtasks.insert(obj.name.clone()),
                        other => {
                            return Err(section.unsupported(format!("object type `{other}`")))
                        }
                    };
                    if !inserted || (p.variables.contains(&obj.name) && p.subtasks.contains(&obj.name)) {
                        return Err(section.error(format!("object `{}` declared twice", obj.name)));
                    }
                }
            }
            Some(":init") => {
                for atom in &parts[1..] {
                    p.init.insert(fact(atom)?);
                }
            }
            Some(":goal") => {
                let g = parts
                    .get(1)
                    .filter(|_| parts.len() == 2)
                    .ok_or_else(|| section.error("expected `(:goal <formula>)`"))?;
                match parse_formula(g, false)? {
                    Formula::And(conj) => {
                        for f in conj {
                            p.goal.insert(fact_from_formula(f, g)?);
                        }
                    }
                    f => {
                        p.goal.insert(fact_from_formula(f, g)?);
                    }
                }
                seen_goal = true;
            }
            Some(other) => return Err(section.unsupported(format!("section {other}"))),
            None => return Err(section.error("expected a section keyword")),
        }
    }
    if !seen_goal {
        return Err(root.error("problem has no :goal"));
    }
    if let Some(sym) = p.undeclared_symbols().first() {
        return Err(root.error(format!("`{sym}` is used but not declared as an object of the right type")));
    }
    Ok(p)
}

fn fact(atom: &Sexpr) -> Result<Fact, PddlError> {
    let f = parse_formula(atom, false)?;
    fact_from_formula(f, atom)
}

fn fact_from_formula(f: Formula, at: &Sexpr) -> Result<Fact, PddlError> {
    match f {
        Formula::Atom { predicate, args } => {
            if args.iter().any(|a| a.starts_with('?')) {
                return Err(at.error("ground facts cannot contain variables"));
            }
            Fact::from_atom(&predicate, &args)
                .ok_or_else(|| at.unsupported(format!("predicate `{predicate}`/{}", args.len())))
        }
        _ => Err(at.unsupported("non-atomic facts")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sop::{Binding, Category, Subtask};

    fn fact_set(facts: &[Fact]) -> BTreeSet<Fact> {
        facts.iter().cloned().collect()
    }

    #[test]
    fn single_subtask_problem() {
        let mut st = Subtask::new("s1", Category::InformationProcessing);
        st.inputs = vec!["x".into()];
        st.outputs = vec!["y".into()];
        let (p, _) = generate_problem(&StructuredSop::from_subtasks([st])).unwrap();
        let av = |s: &str| Fact::Available(s.into());
        assert_eq!(
            p.init,
            fact_set(&[
                av("x"),
                Fact::RequiredInput("x".into(), "s1".into()),
                Fact::SubtaskOutput("y".into(), "s1".into()),
            ])
        );
        assert_eq!(p.goal, fact_set(&[av("y"), Fact::Executed("s1".into())]));
        assert!(p.undeclared_symbols().is_empty());
    }

    #[test]
    fn renamed_binding_emits_map() {
        let mut a = Subtask::new("a", Category::InformationProcessing);
        a.outputs = vec!["mixture".into()];
        let mut b = Subtask::new("b", Category::InformationProcessing);
        b.dependencies = vec!["a".into()];
        b.inputs_from_dependencies = vec![
            Binding::new("a", "mixture", "batter"),
        ];
        let (p, _) = generate_problem(&StructuredSop::from_subtasks([a, b])).unwrap();
        assert!(p.init.contains(&Fact::Map("mixture".into(), "batter".into())));
        assert!(p.init.contains(&Fact::RequiredInput("batter".into(), "b".into())));
    }

    #[test]
    fn same_name_binding_emits_no_map() {
        let mut a = Subtask::new("a", Category::InformationProcessing);
        a.outputs = vec!["Melted Butter".into()];
        let mut b = Subtask::new("b", Category::InformationProcessing);
        b.dependencies = vec!["a".into()];
        b.inputs_from_dependencies = vec![Binding::new("a", "melted butter", "melted_butter")];
        let (p, _) = generate_problem(&StructuredSop::from_subtasks([a, b])).unwrap();
        assert!(!p.init.iter().any(|f| matches!(f, Fact::Map(..))));
    }

    #[test]
    fn fact_order_matches_text_order() {
        let facts = [
            Fact::Map("a".into(), "b".into()),
            Fact::Map("a-b".into(), "c".into()),
            Fact::Available("z".into()),
            Fact::SubtaskOutput("a".into(), "s".into()),
            Fact::RequiredInput("a".into(), "s".into()),
            Fact::Executed("s".into()),
        ];
        let mut by_ord = facts.to_vec();
        by_ord.sort();
        let mut by_text = facts.to_vec();
        by_text.sort_by_key(|f| f.to_string());
        assert_eq!(by_ord, by_text);
    }

    #[test]
    fn golden_single_subtask_text() {
        let mut st = Subtask::new("s1", Category::InformationProcessing);
        st.inputs = vec!["x".into()];
        st.outputs = vec!["y".into()];
        let (p, _) = generate_problem(&StructuredSop::from_subtasks([st])).unwrap();
        let expected = "\
(define (problem sop)
  (:domain sop-meta)
  (:objects
    s1 - subtask
    x - variable
    y - variable)
  (:init
    (available x)
    (required-input x s1)
    (subtask-output y s1))
  (:goal (and
    (available y)
    (executed s1))))
";
        assert_eq!(emit_problem(&p), expected);
        assert_eq!(parse_problem(expected).unwrap(), p);
    }

    #[test]
    fn empty_problem_round_trip() {
        let (p, _) = generate_problem(&StructuredSop::new()).unwrap();
        let text = emit_problem(&p);
        assert_eq!(parse_problem(&text).unwrap(), p);
    }

    #[test]
    fn parse_errors() {
        let unary = "(define (problem p) (:domain sop-meta) (:objects x - variable) (:init (required-input x)) (:goal (and)))";
        assert!(matches!(parse_problem(unary), Err(PddlError::Unsupported { .. })));
        let undeclared = "(define (problem p) (:domain sop-meta) (:objects) (:init (available x)) (:goal (and)))";
        assert!(matches!(parse_problem(undeclared), Err(PddlError::Parse { .. })));
        let typed = "(define (problem p) (:domain sop-meta) (:objects x - thing) (:goal (and)))";
        assert!(matches!(parse_problem(typed), Err(PddlError::Unsupported { .. })));
        let metric = "(define (problem p) (:domain sop-meta) (:goal (and)) (:metric minimize (total-cost)))";
        assert!(matches!(parse_problem(metric), Err(PddlError::Unsupported { .. })));
    }

    #[test]
    fn symbol_error_for_numeric_names() {
        let mut st = Subtask::new("s1", Category::InformationProcessing);
        st.outputs = vec!["42".into()];
        assert!(matches!(
            generate_problem(&StructuredSop::from_subtasks([st])),
            Err(PddlError::Symbol { .. })
        ));
    }
}
