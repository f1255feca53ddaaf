//! JSON wire format.
//!
//! ```json
//! {"structured_SOP": {
//!   "subtask1": {
//!     "name": "...", "description": "...",
//!     "dependencies": [], "inputs": ["corn"],
//!     "inputs_from_dependencies": [
//!       {"source_subtask": "...", "source_output": "...", "bound_as": "..."}],
//!     "outputs": ["mixture"], "category": "InformationProcessing"}}}
//! ```
//!
//! `description` and `category` are required; list fields default to empty
//! and `name` defaults to the subtask id. Unknown fields are kept.

use std::fmt;

use indexmap::IndexMap;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::{Map, Value};

use super::{Binding, Category, SopError, SourceRef, StructuredSop, Subtask};

pub const ROOT_KEY: &str = "structured_SOP";
const SOURCE_REF_KEY: &str = "source_ref";

const SUBTASK_FIELDS: [&str; 7] = [
    "name",
    "description",
    "dependencies",
    "inputs",
    "inputs_from_dependencies",
    "outputs",
    "category",
];

/// Parses and fully validates a structured SOP.
pub fn parse_sop(json_text: &str) -> Result<StructuredSop, SopError> {
    let sop = parse_sop_unchecked(json_text)?;
    sop.check()?;
    Ok(sop)
}

/// Parses the schema only; graph invariants (references, acyclicity) are not
/// checked. Used where defective graphs must still be scored.
pub fn parse_sop_unchecked(json_text: &str) -> Result<StructuredSop, SopError> {
    let raw: RawDocument = serde_json::from_str(json_text)?;
    let subtasks = match raw.subtasks {
        Some(entries) => entries,
        None => {
            return Err(SopError::schema(
                None,
                format!("missing top-level `{ROOT_KEY}` object"),
            ))
        }
    };
    let mut map = IndexMap::with_capacity(subtasks.len());
    for (id, value) in subtasks {
        if map.contains_key(&id) {
            return Err(SopError::schema(
                Some(&id),
                format!("duplicate subtask id `{id}`"),
            ));
        }
        let st = subtask_from_value(&id, value)?;
        map.insert(id, st);
    }
    let source_ref = match raw.source_ref {
        None => None,
        Some(v) => Some(
            serde_json::from_value::<SourceRef>(v)
                .map_err(|e| SopError::schema(None, format!("invalid `{SOURCE_REF_KEY}`: {e}")))?,
        ),
    };
    Ok(StructuredSop {
        subtasks: map,
        source_ref,
        extra: raw.extra,
    })
}

/// Compact canonical JSON.
pub fn serialize_sop(sop: &StructuredSop) -> String {
    serde_json::to_string(&to_value(sop)).expect("JSON values always serialize")
}

/// Indented canonical JSON, same key order as [`serialize_sop`].
pub fn serialize_sop_pretty(sop: &StructuredSop) -> String {
    serde_json::to_string_pretty(&to_value(sop)).expect("JSON values always serialize")
}

fn to_value(sop: &StructuredSop) -> Value {
    let mut subtasks = Map::new();
    for st in sop.iter() {
        subtasks.insert(st.id.clone(), subtask_to_value(st));
    }
    let mut root = Map::new();
    root.insert(ROOT_KEY.to_string(), Value::Object(subtasks));
    if let Some(src) = &sop.source_ref {
        root.insert(
            SOURCE_REF_KEY.to_string(),
            serde_json::to_value(src).expect("source ref serializes"),
        );
    }
    for (k, v) in &sop.extra {
        root.insert(k.clone(), v.clone());
    }
    Value::Object(root)
}

fn subtask_to_value(st: &Subtask) -> Value {
    let strings = |xs: &[String]| Value::Array(xs.iter().cloned().map(Value::String).collect());
    let mut obj = Map::new();
    obj.insert("name".into(), Value::String(st.name.clone()));
    obj.insert("description".into(), Value::String(st.description.clone()));
    obj.insert("dependencies".into(), strings(&st.dependencies));
    obj.insert("inputs".into(), strings(&st.inputs));
    let bindings = st
        .inputs_from_dependencies
        .iter()
        .map(|b| {
            let mut m = Map::new();
            m.insert("source_subtask".into(), Value::String(b.source_subtask.clone()));
            m.insert("source_output".into(), Value::String(b.source_output.clone()));
            m.insert("bound_as".into(), Value::String(b.bound_as.clone()));
            Value::Object(m)
        })
        .collect();
    obj.insert("inputs_from_dependencies".into(), Value::Array(bindings));
    obj.insert("outputs".into(), strings(&st.outputs));
    obj.insert("category".into(), Value::String(st.category.as_str().into()));
    for (k, v) in &st.extra {
        obj.insert(k.clone(), v.clone());
    }
    Value::Object(obj)
}

fn subtask_from_value(id: &str, value: Value) -> Result<Subtask, SopError> {
    let mut obj = match value {
        Value::Object(obj) => obj,
        other => {
            return Err(SopError::schema(
                Some(id),
                format!("expected an object, found {}", kind_of(&other)),
            ))
        }
    };
    let description = match obj.remove("description") {
        Some(Value::String(s)) => s,
        Some(other) => return Err(ill_typed(id, "description", "a string", &other)),
        None => return Err(SopError::schema(Some(id), "missing field `description`")),
    };
    let name = match obj.remove("name") {
        Some(Value::String(s)) => s,
        Some(Value::Null) | None => id.to_string(),
        Some(other) => return Err(ill_typed(id, "name", "a string", &other)),
    };
    let category = match obj.remove("category") {
        Some(Value::String(s)) => Category::parse(&s).ok_or_else(|| {
            SopError::schema(Some(id), format!("unknown category `{s}`"))
        })?,
        Some(other) => return Err(ill_typed(id, "category", "a string", &other)),
        None => return Err(SopError::schema(Some(id), "missing field `category`")),
    };
    let dependencies = string_list(id, "dependencies", obj.remove("dependencies"))?;
    let inputs = string_list(id, "inputs", obj.remove("inputs"))?;
    let outputs = string_list(id, "outputs", obj.remove("outputs"))?;
    let inputs_from_dependencies = bindings(id, obj.remove("inputs_from_dependencies"))?;
    debug_assert!(SUBTASK_FIELDS.iter().all(|f| !obj.contains_key(*f)));
    Ok(Subtask {
        id: id.to_string(),
        name,
        description,
        dependencies,
        inputs,
        inputs_from_dependencies,
        outputs,
        category,
        extra: obj,
    })
}

fn string_list(id: &str, field: &str, value: Option<Value>) -> Result<Vec<String>, SopError> {
    match value {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|item| match item {
                Value::String(s) => Ok(s),
                other => Err(ill_typed(id, field, "a list of strings", &other)),
            })
            .collect(),
        Some(other) => Err(ill_typed(id, field, "a list of strings", &other)),
    }
}

fn bindings(id: &str, value: Option<Value>) -> Result<Vec<Binding>, SopError> {
    const FIELD: &str = "inputs_from_dependencies";
    let items = match value {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(items)) => items,
        Some(other) => return Err(ill_typed(id, FIELD, "a list of bindings", &other)),
    };
    items
        .into_iter()
        .map(|item| {
            let obj = match item {
                Value::Object(obj) => obj,
                other => return Err(ill_typed(id, FIELD, "a binding object", &other)),
            };
            let get = |key: &str| match obj.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(other) => Err(ill_typed(id, &format!("{FIELD}.{key}"), "a string", other)),
                None => Err(SopError::schema(
                    Some(id),
                    format!("binding is missing `{key}`"),
                )),
            };
            Ok(Binding {
                source_subtask: get("source_subtask")?,
                source_output: get("source_output")?,
                bound_as: get("bound_as")?,
            })
        })
        .collect()
}

fn ill_typed(id: &str, field: &str, expected: &str, found: &Value) -> SopError {
    SopError::schema(
        Some(id),
        format!("field `{field}` must be {expected}, found {}", kind_of(found)),
    )
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Top level of the document. The subtask map is read entry by entry so
/// repeated ids survive long enough to be rejected.
struct RawDocument {
    subtasks: Option<Vec<(String, Value)>>,
    source_ref: Option<Value>,
    extra: Map<String, Value>,
}

struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;
        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping subtask ids to subtasks")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        deserializer.deserialize_map(EntriesVisitor)
    }
}

impl<'de> Deserialize<'de> for RawDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DocVisitor;
        impl<'de> Visitor<'de> for DocVisitor {
            type Value = RawDocument;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "an object with a `{ROOT_KEY}` key")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawDocument, A::Error> {
                let mut doc = RawDocument {
                    subtasks: None,
                    source_ref: None,
                    extra: Map::new(),
                };
                while let Some(key) = map.next_key::<String>()? {
                    if key == ROOT_KEY {
                        if doc.subtasks.is_some() {
                            return Err(de::Error::custom(format!("duplicate `{ROOT_KEY}` key")));
                        }
                        doc.subtasks = Some(map.next_value::<Entries>()?.0);
                    } else if key == SOURCE_REF_KEY {
                        doc.source_ref = Some(map.next_value()?);
                    } else {
                        let v = map.next_value()?;
                        doc.extra.insert(key, v);
                    }
                }
                Ok(doc)
            }
        }
        deserializer.deserialize_map(DocVisitor)
    }
}
