use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::extract::extract_json;
use super::{ChatClient, PipelineConfig, PipelineError};
use crate::sop::{goal_state, initial_state, serialize_sop_pretty, SopDocument, StructuredSop};

/// A judged score in [0, 1] with the model's reasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub score: f64,
    pub rationale: String,
    #[serde(default)]
    pub missing_items: Vec<String>,
    #[serde(default)]
    pub extra_items: Vec<String>,
}

/// Compares the graph's initial state with what the text requires up front.
pub fn judge_initial_state(
    sop: &StructuredSop,
    doc: &SopDocument,
    client: &dyn ChatClient,
    cfg: &PipelineConfig,
) -> Result<JudgeVerdict, PipelineError> {
    let state = bullet_list(initial_state(sop));
    ask(client, cfg, "judge_initial_state", &[("state", &state), ("document", &doc.text)])
}

/// Compares the graph's goal state with the final results of the text.
pub fn judge_goal_state(
    sop: &StructuredSop,
    doc: &SopDocument,
    client: &dyn ChatClient,
    cfg: &PipelineConfig,
) -> Result<JudgeVerdict, PipelineError> {
    let state = bullet_list(goal_state(sop));
    ask(client, cfg, "judge_goal_state", &[("state", &state), ("document", &doc.text)])
}

/// Asks whether the graph leaves out any critical detail of the text.
pub fn judge_completeness(
    sop: &StructuredSop,
    doc: &SopDocument,
    client: &dyn ChatClient,
    cfg: &PipelineConfig,
) -> Result<JudgeVerdict, PipelineError> {
    let graph = serialize_sop_pretty(sop);
    ask(client, cfg, "judge_completeness", &[("sop", &graph), ("document", &doc.text)])
}

fn bullet_list(items: impl IntoIterator<Item = String>) -> String {
    let lines: Vec<String> = items.into_iter().map(|v| format!("- {v}")).collect();
    if lines.is_empty() {
        "(empty)".into()
    } else {
        lines.join("\n")
    }
}

fn ask(
    client: &dyn ChatClient,
    cfg: &PipelineConfig,
    template: &str,
    vars: &[(&str, &str)],
) -> Result<JudgeVerdict, PipelineError> {
    let prompt = cfg.render(template, vars)?;
    let reply = client.complete(&cfg.request(prompt))?;
    parse_verdict(&reply.text)
}

/// Reads a verdict. Numeric strings are accepted as scores; scores outside
/// [0, 1] are clamped and the clamp is noted in the rationale.
pub fn parse_verdict(text: &str) -> Result<JudgeVerdict, PipelineError> {
    let value = extract_json(text).map_err(PipelineError::JudgeParse)?;
    let obj = value
        .as_object()
        .ok_or_else(|| PipelineError::JudgeParse("verdict is not a JSON object".into()))?;
    let raw = match obj.get("score") {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
    .filter(|x| x.is_finite())
    .ok_or_else(|| PipelineError::JudgeParse(format!("score is not a number: {}", obj.get("score").unwrap_or(&Value::Null))))?;
    let strings = |key: &str| -> Result<Vec<String>, PipelineError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    other => Ok(other.to_string()),
                })
                .collect(),
            Some(other) => Err(PipelineError::JudgeParse(format!("`{key}` is not a list: {other}"))),
        }
    };
    let mut rationale = obj
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let score = raw.clamp(0.0, 1.0);
    if score != raw {
        if !rationale.is_empty() {
            rationale.push(' ');
        }
        rationale.push_str(&format!("[score {raw} clamped to {score}]"));
    }
    Ok(JudgeVerdict {
        score,
        rationale,
        missing_items: strings("missing_items")?,
        extra_items: strings("extra_items")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockClient, RecordingClient};
    use crate::sop::{Category, Subtask};

    fn sop() -> StructuredSop {
        let mut a = Subtask::new("a", Category::HumanInput);
        a.inputs = vec!["Baking Dish".into(), "corn".into()];
        a.outputs = vec!["casserole".into()];
        StructuredSop::from_subtasks([a])
    }

    fn doc() -> SopDocument {
        SopDocument::new("d", "Put corn in a baking dish.").unwrap()
    }

    #[test]
    fn verdict_fields() {
        let v = parse_verdict(r#"{"score": 0.5, "rationale": "r", "missing_items": ["pepper"]}"#).unwrap();
        assert_eq!(v.score, 0.5);
        assert_eq!(v.missing_items, ["pepper"]);
        assert!(v.extra_items.is_empty());
    }

    #[test]
    fn clamping_is_flagged() {
        let v = parse_verdict(r#"{"score": 85, "rationale": "mostly"}"#).unwrap();
        assert_eq!(v.score, 1.0);
        assert!(v.rationale.contains("clamped"));
        assert_eq!(parse_verdict(r#"{"score": "-0.2"}"#).unwrap().score, 0.0);
    }

    #[test]
    fn non_numeric_score() {
        for bad in [r#"{"score": "high"}"#, r#"{"rationale": "x"}"#, "[1]", "nope"] {
            assert!(matches!(parse_verdict(bad), Err(PipelineError::JudgeParse(_))), "{bad}");
        }
    }

    #[test]
    fn prompts_embed_state_verbatim_one_call_each() {
        let client = RecordingClient::new(MockClient::scripted(|_| Ok(r#"{"score": 1, "rationale": "ok"}"#.into())));
        let cfg = PipelineConfig::default();
        judge_initial_state(&sop(), &doc(), &client, &cfg).unwrap();
        assert_eq!(client.calls(), 1);
        judge_goal_state(&sop(), &doc(), &client, &cfg).unwrap();
        assert_eq!(client.calls(), 2);
        judge_completeness(&sop(), &doc(), &client, &cfg).unwrap();
        assert_eq!(client.calls(), 3);
        let t = client.transcript();
        for v in initial_state(&sop()) {
            assert!(t.entries()[0].prompt_text.contains(&v), "{v}");
        }
        assert!(t.entries()[1].prompt_text.contains("casserole"));
        assert!(t.entries()[2].prompt_text.contains("\"structured_SOP\""));
    }
}
