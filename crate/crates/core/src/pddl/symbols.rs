use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolKind {
    Subtask,
    Variable,
}

// Object names that would read as syntax in a problem file.
const RESERVED: &[&str] = &[
    "and", "or", "not", "imply", "forall", "exists", "when", "either", "object", "variable",
    "subtask", "define", "domain", "problem",
];

/// Lowercase, map everything outside `[a-z0-9-]` to `-`, collapse hyphen
/// runs, strip leading digits and hyphens and trailing hyphens.
pub fn sanitize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars().flat_map(char::to_lowercase) {
        let c = if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' {
            c
        } else {
            '-'
        };
        if c == '-' && out.ends_with('-') {
            continue;
        }
        out.push(c);
    }
    out.trim_start_matches(|c: char| c.is_ascii_digit() || c == '-')
        .trim_end_matches('-')
        .to_string()
}

/// Bidirectional map between source names and PDDL symbols. Subtasks and
/// variables share one object namespace, so symbols are unique across both
/// kinds; collisions get `-2`, `-3`, ... in assignment order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    forward: IndexMap<(SymbolKind, String), String>,
    reverse: HashMap<String, (SymbolKind, String)>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the symbol for `name`, assigning one on first use.
    pub fn intern(&mut self, kind: SymbolKind, name: &str) -> Result<String, PddlError> {
        let key = (kind, name.to_string());
        if let Some(sym) = self.forward.get(&key) {
            return Ok(sym.clone());
        }
        let base = sanitize(name);
        if base.is_empty() {
            return Err(PddlError::Symbol {
                name: name.to_string(),
            });
        }
        let mut candidate = base.clone();
        let mut n = 1;
        while self.reverse.contains_key(&candidate) || RESERVED.contains(&candidate.as_str()) {
            n += 1;
            candidate = format!("{base}-{n}");
        }
        self.reverse.insert(candidate.clone(), key.clone());
        self.forward.insert(key, candidate.clone());
        Ok(candidate)
    }

    pub fn symbol(&self, kind: SymbolKind, name: &str) -> Option<&str> {
        self.forward
            .get(&(kind, name.to_string()))
            .map(String::as_str)
    }

    pub fn original(&self, symbol: &str) -> Option<(SymbolKind, &str)> {
        self.reverse.get(symbol).map(|(k, n)| (*k, n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// `(kind, source name, symbol)` in assignment order.
    pub fn iter(&self) -> impl Iterator<Item = (SymbolKind, &str, &str)> {
        self.forward
            .iter()
            .map(|((k, n), s)| (*k, n.as_str(), s.as_str()))
    }
}
