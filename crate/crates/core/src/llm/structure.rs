use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::extract::extract_json;
use super::segment::segment;
use super::{ChatClient, PipelineConfig, PipelineError};
use crate::sop::{
    check_subtask, parse_sop_unchecked, Category, Segment, SopDocument, SourceRef, StructuredSop, Subtask,
    ROOT_KEY,
};
use crate::validators::structural_preflight;

/// What later segments see of an earlier subtask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskSummary {
    pub id: String,
    pub name: String,
    pub outputs: Vec<String>,
}

impl From<&Subtask> for SubtaskSummary {
    fn from(st: &Subtask) -> Self {
        SubtaskSummary {
            id: st.id.clone(),
            name: st.name.clone(),
            outputs: st.outputs.clone(),
        }
    }
}

/// Turns one segment into subtasks.
///
/// New subtasks get ids `<seg_id>-<local id>`; references to ids in
/// `context` are kept. An unusable answer is retried once with the problems
/// found, then reported as a schema error.
pub fn generate_structure(
    seg: &Segment,
    context: &[SubtaskSummary],
    client: &dyn ChatClient,
    cfg: &PipelineConfig,
) -> Result<Vec<Subtask>, PipelineError> {
    let context_text = if context.is_empty() {
        "(none)".to_string()
    } else {
        serde_json::to_string_pretty(context).expect("summaries serialize")
    };
    let prompt = cfg.render(
        "structure",
        &[
            ("context", &context_text),
            ("segment_id", &seg.seg_id),
            ("segment", &seg.text),
        ],
    )?;
    let prior: BTreeSet<&str> = context.iter().map(|c| c.id.as_str()).collect();
    let reply = client.complete(&cfg.request(prompt.clone()))?;
    let findings = match interpret(&reply.text, &seg.seg_id, &prior) {
        Ok(subtasks) => return Ok(subtasks),
        Err(findings) => findings,
    };
    log::info!("{}: reprompting after {} schema finding(s)", seg.seg_id, findings.len());
    let listed: String = findings.iter().map(|f| format!("- {f}\n")).collect();
    let repair = cfg.render(
        "structure_repair",
        &[
            ("findings", listed.trim_end()),
            ("previous", &reply.text),
            ("original", &prompt),
        ],
    )?;
    let reply = client.complete(&cfg.request(repair))?;
    interpret(&reply.text, &seg.seg_id, &prior).map_err(|findings| PipelineError::Schema { findings })
}

fn interpret(text: &str, prefix: &str, prior: &BTreeSet<&str>) -> Result<Vec<Subtask>, Vec<String>> {
    let value = extract_json(text).map_err(|e| vec![e])?;
    let wrapped = match value {
        Value::Object(o) if o.contains_key(ROOT_KEY) => Value::Object(o),
        Value::Object(o) if !o.is_empty() && o.values().all(Value::is_object) => {
            let mut root = Map::new();
            root.insert(ROOT_KEY.into(), Value::Object(o));
            Value::Object(root)
        }
        _ => return Err(vec![format!("expected an object with a `{ROOT_KEY}` map of subtasks")]),
    };
    let parsed = parse_sop_unchecked(&wrapped.to_string()).map_err(|e| vec![e.to_string()])?;
    if parsed.is_empty() {
        return Err(vec!["no subtasks were returned".into()]);
    }

    let own = format!("{prefix}-");
    let local: BTreeSet<String> = parsed.subtasks.keys().cloned().collect();
    let rename = |id: &str| -> Option<String> {
        if local.contains(id) {
            Some(if id.starts_with(&own) { id.to_string() } else { format!("{own}{id}") })
        } else if prior.contains(id) {
            Some(id.to_string())
        } else {
            None
        }
    };
    let mut findings = Vec::new();
    let mut out = Vec::with_capacity(parsed.len());
    for mut st in parsed.subtasks.into_values() {
        let original = st.id.clone();
        st.id = rename(&original).expect("local ids always rename");
        for dep in &mut st.dependencies {
            match rename(dep) {
                Some(new) => *dep = new,
                None => findings.push(format!("`{original}` depends on unknown subtask `{dep}`")),
            }
        }
        for b in &mut st.inputs_from_dependencies {
            match rename(&b.source_subtask) {
                Some(new) => b.source_subtask = new,
                None => findings.push(format!(
                    "`{original}` binds `{}` from unknown subtask `{}`",
                    b.bound_as, b.source_subtask
                )),
            }
        }
        if let Err(e) = check_subtask(&st) {
            findings.push(e.to_string());
        }
        out.push(st);
    }
    if findings.is_empty() {
        let stubs = prior.iter().map(|id| Subtask::new(*id, Category::Knowledge));
        let probe = StructuredSop::from_subtasks(stubs.chain(out.iter().cloned()));
        if let Err(e) = probe.check() {
            findings.push(e.to_string());
        }
    }
    if findings.is_empty() {
        Ok(out)
    } else {
        Err(findings)
    }
}

/// Unions per-segment subtasks into one graph and checks it.
pub fn merge(subgraphs: Vec<Vec<Subtask>>) -> Result<StructuredSop, PipelineError> {
    let mut sop = StructuredSop::new();
    for st in subgraphs.into_iter().flatten() {
        if sop.subtasks.contains_key(&st.id) {
            return Err(PipelineError::IdCollision { id: st.id });
        }
        sop.subtasks.insert(st.id.clone(), st);
    }
    sop.check()?;
    let findings = structural_preflight(&sop);
    if !findings.is_empty() {
        return Err(PipelineError::Preflight(findings));
    }
    Ok(sop)
}

/// Segments `doc`, structures each segment with the subtasks of earlier
/// segments as context, and merges the results.
pub fn structure_document(
    doc: &SopDocument,
    client: &dyn ChatClient,
    cfg: &PipelineConfig,
) -> Result<(Vec<Segment>, StructuredSop), PipelineError> {
    let segments = segment(doc, client, cfg)?;
    let mut context: Vec<SubtaskSummary> = Vec::new();
    let mut parts = Vec::with_capacity(segments.len());
    for seg in &segments {
        let subtasks = generate_structure(seg, &context, client, cfg)?;
        context.extend(subtasks.iter().map(SubtaskSummary::from));
        parts.push(subtasks);
    }
    let mut sop = merge(parts)?;
    sop.source_ref = Some(SourceRef {
        doc_id: Some(doc.doc_id.clone()),
        segment_ids: segments.iter().map(|s| s.seg_id.clone()).collect(),
    });
    Ok((segments, sop))
}

/// Ids that `subtasks` reference but do not declare.
#[cfg(test)]
fn external_references(subtasks: &[Subtask]) -> BTreeSet<String> {
    let declared: BTreeSet<&str> = subtasks.iter().map(|s| s.id.as_str()).collect();
    subtasks
        .iter()
        .flat_map(|s| {
            s.dependencies
                .iter()
                .chain(s.inputs_from_dependencies.iter().map(|b| &b.source_subtask))
        })
        .filter(|id| !declared.contains(id.as_str()))
        .cloned()
        .collect()
}
