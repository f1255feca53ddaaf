//! The meta-planning encoding of a structured SOP.
//!
//! The domain is fixed: variables become `available`, a subtask may execute
//! once all its `required-input` variables are available and then makes its
//! `subtask-output` variables available, and `assign` copies availability
//! along `map` facts (renamed bindings). Each graph yields its own problem.
//! The emitted text is a small ADL subset that [`parse_domain`] and
//! [`parse_problem`] read back.

mod domain;
mod ground;
mod problem;
mod sexpr;
mod symbols;

pub use domain::{
    emit_domain, parse_domain, ActionSchema, Domain, Formula, PredicateDecl, TypedParam,
    DOMAIN_NAME,
};
pub use ground::{ground, GroundedAction, GroundedTask, PropId};
pub use problem::{emit_problem, generate_problem, parse_problem, Fact, MetaProblem};
pub use symbols::{sanitize, SymbolKind, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported PDDL feature at {line}:{column}: {feature}")]
    Unsupported {
        feature: String,
        line: usize,
        column: usize,
    },

    #[error("name `{name}` has no valid PDDL symbol")]
    Symbol { name: String },
}

/// Parses a domain and a problem together.
pub fn parse_pddl(domain_text: &str, problem_text: &str) -> Result<(Domain, MetaProblem), PddlError> {
    Ok((parse_domain(domain_text)?, parse_problem(problem_text)?))
}
