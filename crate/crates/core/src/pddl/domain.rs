use std::fmt::{self, Write as _};

use super::sexpr::{self, Sexpr};
use super::PddlError;

pub const DOMAIN_NAME: &str = "sop-meta";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedParam {
    /// Includes the leading `?`.
    pub name: String,
    pub ty: String,
}

impl TypedParam {
    pub fn new(name: &str, ty: &str) -> Self {
        TypedParam {
            name: name.to_string(),
            ty: ty.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedParam>,
}

/// The formula language of the supported subset: conjunctions of atoms,
/// universally quantified implications in preconditions and universally
/// quantified conditional effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom { predicate: String, args: Vec<String> },
    And(Vec<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Forall(Vec<TypedParam>, Box<Formula>),
    When(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(predicate: &str, args: &[&str]) -> Self {
        Formula::Atom {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub precondition: Formula,
    pub effect: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    /// The fixed meta-planning domain. A plan exists for a problem over this
    /// domain iff every subtask can be executed in some order from the
    /// initial variables.
    pub fn meta() -> Domain {
        let p = TypedParam::new;
        let pred = |name: &str, params: Vec<TypedParam>| PredicateDecl {
            name: name.to_string(),
            params,
        };
        Domain {
            name: DOMAIN_NAME.to_string(),
            requirements: vec![":adl".to_string()],
            types: vec!["variable".to_string(), "subtask".to_string()],
            predicates: vec![
                pred("available", vec![p("?v", "variable")]),
                pred("required-input", vec![p("?v", "variable"), p("?s", "subtask")]),
                pred("subtask-output", vec![p("?v", "variable"), p("?s", "subtask")]),
                pred("map", vec![p("?v1", "variable"), p("?v2", "variable")]),
                pred("executed", vec![p("?s", "subtask")]),
            ],
            actions: vec![
                ActionSchema {
                    name: "execute-subtask".to_string(),
                    params: vec![p("?s", "subtask")],
                    precondition: Formula::Forall(
                        vec![p("?v", "variable")],
                        Box::new(Formula::Imply(
                            Box::new(Formula::atom("required-input", &["?v", "?s"])),
                            Box::new(Formula::atom("available", &["?v"])),
                        )),
                    ),
                    effect: Formula::And(vec![
                        Formula::atom("executed", &["?s"]),
                        Formula::Forall(
                            vec![p("?v", "variable")],
                            Box::new(Formula::When(
                                Box::new(Formula::atom("subtask-output", &["?v", "?s"])),
                                Box::new(Formula::atom("available", &["?v"])),
                            )),
                        ),
                    ]),
                },
                ActionSchema {
                    name: "assign".to_string(),
                    params: vec![p("?v1", "variable"), p("?v2", "variable")],
                    precondition: Formula::And(vec![
                        Formula::atom("map", &["?v1", "?v2"]),
                        Formula::atom("available", &["?v1"]),
                    ]),
                    effect: Formula::atom("available", &["?v2"]),
                },
            ],
        }
    }

    /// Canonical text.
    pub fn to_pddl(&self) -> String {
        let mut out = String::new();
        writeln!(out, "(define (domain {})", self.name).unwrap();
        writeln!(out, "  (:requirements {})", self.requirements.join(" ")).unwrap();
        writeln!(out, "  (:types {})", self.types.join(" ")).unwrap();
        if self.predicates.is_empty() {
            out.push_str("  (:predicates)");
        } else {
            out.push_str("  (:predicates");
            for p in &self.predicates {
                out.push_str("\n    (");
                out.push_str(&p.name);
                for param in &p.params {
                    write!(out, " {} - {}", param.name, param.ty).unwrap();
                }
                out.push(')');
            }
            out.push(')');
        }
        for a in &self.actions {
            write!(out, "\n  (:action {}\n    :parameters (", a.name).unwrap();
            for (i, param) in a.params.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{} - {}", param.name, param.ty).unwrap();
            }
            write!(
                out,
                ")\n    :precondition {}\n    :effect {})",
                a.precondition, a.effect
            )
            .unwrap();
        }
        out.push_str(")\n");
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { predicate, args } => {
                write!(f, "({predicate}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Formula::And(parts) => {
                f.write_str("(and")?;
                for p in parts {
                    write!(f, " {p}")?;
                }
                f.write_str(")")
            }
            Formula::Imply(a, b) => write!(f, "(imply {a} {b})"),
            Formula::When(a, b) => write!(f, "(when {a} {b})"),
            Formula::Forall(params, body) => {
                f.write_str("(forall (")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{} - {}", p.name, p.ty)?;
                }
                write!(f, ") {body})")
            }
        }
    }
}

/// The fixed domain as canonical PDDL text.
pub fn emit_domain() -> String {
    Domain::meta().to_pddl()
}

const UNSUPPORTED_REQUIREMENTS: &[&str] = &[
    ":fluents",
    ":numeric-fluents",
    ":durative-actions",
    ":duration-inequalities",
    ":continuous-effects",
    ":timed-initial-literals",
    ":action-costs",
    ":derived-predicates",
    ":preferences",
    ":constraints",
    ":object-fluents",
];

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let root = sexpr::read(text)?;
    let items = list(&root, "domain definition")?;
    expect_symbol(items.first(), &root, "define")?;
    let header = items
        .get(1)
        .ok_or_else(|| root.error("expected `(domain <name>)`"))?;
    let h = list(header, "`(domain <name>)`")?;
    if h.len() != 2 || h[0].as_symbol() != Some("domain") {
        return Err(header.error("expected `(domain <name>)`"));
    }
    let mut domain = Domain {
        name: symbol(&h[1], "domain name")?.to_string(),
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for section in &items[2..] {
        let parts = list(section, "domain section")?;
        match section.head() {
            Some(":requirements") => {
                for r in &parts[1..] {
                    let req = symbol(r, "requirement")?;
                    if UNSUPPORTED_REQUIREMENTS.contains(&req) {
                        return Err(r.unsupported(format!("requirement {req}")));
                    }
                    domain.requirements.push(req.to_string());
                }
            }
            Some(":types") => {
                for t in &parts[1..] {
                    let ty = symbol(t, "type name")?;
                    if ty == "-" {
                        return Err(t.unsupported("type hierarchies"));
                    }
                    domain.types.push(ty.to_string());
                }
            }
            Some(":predicates") => {
                for p in &parts[1..] {
                    let decl = list(p, "predicate declaration")?;
                    let name = symbol(
                        decl.first().ok_or_else(|| p.error("empty predicate declaration"))?,
                        "predicate name",
                    )?;
                    domain.predicates.push(PredicateDecl {
                        name: name.to_string(),
                        params: typed_list(&decl[1..])?,
                    });
                }
            }
            Some(":action") => domain.actions.push(parse_action(section, parts)?),
            Some(other) => return Err(section.unsupported(format!("section {other}"))),
            None => return Err(section.error("expected a section keyword")),
        }
    }
    Ok(domain)
}

fn parse_action(section: &Sexpr, parts: &[Sexpr]) -> Result<ActionSchema, PddlError> {
    let name = symbol(
        parts.get(1).ok_or_else(|| section.error("action without a name"))?,
        "action name",
    )?;
    let mut params = None;
    let mut precondition = None;
    let mut effect = None;
    let mut rest = parts[2..].iter();
    while let Some(key) = rest.next() {
        let k = symbol(key, "action keyword")?;
        let value = rest
            .next()
            .ok_or_else(|| key.error(format!("missing value after {k}")))?;
        match k {
            ":parameters" => params = Some(typed_list(list(value, "parameter list")?)?),
            ":precondition" => precondition = Some(parse_formula(value, false)?),
            ":effect" => effect = Some(parse_formula(value, true)?),
            other => return Err(key.unsupported(format!("action field {other}"))),
        }
    }
    Ok(ActionSchema {
        name: name.to_string(),
        params: params.unwrap_or_default(),
        precondition: precondition.unwrap_or(Formula::And(Vec::new())),
        effect: effect.ok_or_else(|| section.error(format!("action `{name}` has no :effect")))?,
    })
}

pub(crate) fn parse_formula(e: &Sexpr, effect: bool) -> Result<Formula, PddlError> {
    let items = list(e, "formula")?;
    let head = match items.first() {
        None => return Ok(Formula::And(Vec::new())),
        Some(h) => symbol(h, "formula head")?,
    };
    let arity = |n: usize| {
        if items.len() == n + 1 {
            Ok(())
        } else {
            Err(e.error(format!("`{head}` takes {n} arguments")))
        }
    };
    match head {
        "and" => Ok(Formula::And(
            items[1..]
                .iter()
                .map(|f| parse_formula(f, effect))
                .collect::<Result<_, _>>()?,
        )),
        "imply" if !effect => {
            arity(2)?;
            Ok(Formula::Imply(
                Box::new(parse_formula(&items[1], false)?),
                Box::new(parse_formula(&items[2], false)?),
            ))
        }
        "when" if effect => {
            arity(2)?;
            Ok(Formula::When(
                Box::new(parse_formula(&items[1], false)?),
                Box::new(parse_formula(&items[2], true)?),
            ))
        }
        "forall" => {
            arity(2)?;
            Ok(Formula::Forall(
                typed_list(list(&items[1], "quantified variables")?)?,
                Box::new(parse_formula(&items[2], effect)?),
            ))
        }
        "not" if effect => Err(e.unsupported("delete effects")),
        "not" | "or" | "exists" | "=" | "increase" | "decrease" | "assign" | "scale-up"
        | "scale-down" | "at" | "over" | "preference" | "imply" | "when" => {
            Err(e.unsupported(format!("`{head}` in this position")))
        }
        predicate => Ok(Formula::Atom {
            predicate: predicate.to_string(),
            args: items[1..]
                .iter()
                .map(|a| symbol(a, "term").map(str::to_string))
                .collect::<Result<_, _>>()?,
        }),
    }
}

/// `?a ?b - t ?c - u` and untyped names (typed as `object`).
pub(crate) fn typed_list(items: &[Sexpr]) -> Result<Vec<TypedParam>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = symbol(&items[i], "name")?;
        if s == "-" {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| items[i].error("missing type after `-`"))?;
            if ty_expr.head() == Some("either") {
                return Err(ty_expr.unsupported("either types"));
            }
            let ty = symbol(ty_expr, "type name")?;
            if pending.is_empty() {
                return Err(items[i].error("`-` without preceding names"));
            }
            out.extend(pending.drain(..).map(|n| TypedParam { name: n, ty: ty.to_string() }));
            i += 2;
        } else {
            pending.push(s.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| TypedParam {
        name: n,
        ty: "object".to_string(),
    }));
    Ok(out)
}

pub(crate) fn list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list().ok_or_else(|| e.error(format!("expected {what}")))
}

pub(crate) fn symbol<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_symbol().ok_or_else(|| e.error(format!("expected {what}")))
}

pub(crate) fn expect_symbol(e: Option<&Sexpr>, ctx: &Sexpr, want: &str) -> Result<(), PddlError> {
    match e {
        Some(s) if s.as_symbol() == Some(want) => Ok(()),
        Some(s) => Err(s.error(format!("expected `{want}`"))),
        None => Err(ctx.error(format!("expected `{want}`"))),
    }
}
