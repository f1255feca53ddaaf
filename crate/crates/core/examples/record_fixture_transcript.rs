//! Records the replay transcript for the fixture dataset.
//!
//! A scripted responder plays the model: one segment per document, the
//! hand-authored graph for the structure step, and full marks from every
//! judge. Rerun after changing any prompt template:
//!
//!     cargo run -p sopstruct-core --example record_fixture_transcript

use std::path::{Path, PathBuf};

use sopstruct_core::harness::{evaluate, ingest, DatasetFormat, DatasetSpec, EvalOptions};
use sopstruct_core::llm::{ChatClient, ChatRequest, LlmError, MockClient, RecordingClient};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

fn main() {
    let root = workspace_root();
    let spec = DatasetSpec {
        name: "fixtures".into(),
        root_path: root.join("fixtures/dataset"),
        format: DatasetFormat::PlainTextDir,
        limit: None,
    };
    let docs = ingest(&spec).expect("fixture dataset");
    let graphs: Vec<(String, String)> = docs
        .iter()
        .map(|d| {
            let path = root.join("fixtures/sops").join(format!("{}.json", d.doc_id));
            (d.text.clone(), std::fs::read_to_string(&path).expect("fixture graph"))
        })
        .collect();

    let responder = MockClient::scripted(move |req: &ChatRequest| {
        let prompt = &req.messages[0].content;
        if prompt.starts_with("You split") {
            let (text, _) = graphs
                .iter()
                .find(|(t, _)| prompt.contains(t.as_str()))
                .ok_or_else(|| LlmError::Response("unknown document".into()))?;
            let first: Vec<&str> = text.split_whitespace().take(4).collect();
            return Ok(format!(
                "{{\"segments\": [{{\"title\": \"Procedure\", \"start\": \"{}\"}}]}}",
                first.join(" ")
            ));
        }
        if prompt.starts_with("You convert") {
            let (_, graph) = graphs
                .iter()
                .find(|(t, _)| prompt.contains(t.as_str()))
                .ok_or_else(|| LlmError::Response("unknown segment".into()))?;
            return Ok(format!("```json\n{}\n```", graph.trim()));
        }
        Ok(r#"{"score": 1.0, "rationale": "The graph matches the procedure.", "missing_items": [], "extra_items": []}"#.into())
    });
    let recorder = RecordingClient::new(responder);
    let eval = evaluate(&docs, Some(&recorder as &dyn ChatClient), &EvalOptions::default());
    assert_eq!(eval.report.errored_rows(), 0, "{:#?}", eval.report.rows);

    let out = root.join("fixtures/transcripts/fixtures.jsonl");
    std::fs::write(&out, recorder.transcript().to_jsonl()).expect("write transcript");
    println!("wrote {} calls to {}", recorder.calls(), out.display());
}
