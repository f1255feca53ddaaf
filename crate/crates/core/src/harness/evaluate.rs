use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::config::{HarnessConfig, MetadataOverrides};
use super::report::{MetricReport, MetricRow, RunMetadata};
use super::Metric;
use crate::exec::Execution;
use crate::llm::{
    judge_completeness, judge_goal_state, judge_initial_state, structure_document, ChatClient, JudgeVerdict,
    LlmTranscript, PipelineConfig, PipelineError, RecordingClient,
};
use crate::pddl::{emit_problem, generate_problem};
use crate::planner::{structured_plan_score, PlanScore};
use crate::sop::{parse_sop_unchecked, Segment, SopDocument, StructuredSop};
use crate::validators::{deterministic_scores, Finding};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub pipeline: PipelineConfig,
    pub execution: Execution,
    /// Dataset name shown in the report.
    pub dataset: String,
    pub metadata: MetadataOverrides,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            pipeline: PipelineConfig::default(),
            execution: Execution::Sequential,
            dataset: "dataset".into(),
            metadata: MetadataOverrides::default(),
        }
    }
}

impl EvalOptions {
    pub fn from_config(cfg: &HarnessConfig, dataset: impl Into<String>) -> Result<Self, String> {
        Ok(EvalOptions {
            pipeline: cfg.pipeline_config()?,
            execution: Execution::with_threads(cfg.concurrency),
            dataset: dataset.into(),
            metadata: cfg.metadata.clone(),
        })
    }

    fn run_metadata(&self) -> RunMetadata {
        RunMetadata {
            dataset: self.dataset.clone(),
            model: self.pipeline.model.clone(),
            prompt_versions: self.pipeline.prompts.versions(),
            timestamp: self.metadata.timestamp.clone().unwrap_or_else(|| {
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            }),
            git_revision: self.metadata.git_revision.clone().or_else(detect_git_revision),
        }
    }
}

fn detect_git_revision() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

/// Everything produced for one document, for writing out next to the
/// report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocArtifacts {
    pub doc_id: String,
    pub segments: Vec<Segment>,
    #[serde(skip)]
    pub sop: Option<StructuredSop>,
    pub plan: Option<PlanScore>,
    pub problem_pddl: Option<String>,
    pub findings: Vec<Finding>,
    pub verdicts: Vec<(Metric, JudgeVerdict)>,
    /// Model calls made for this document.
    #[serde(skip)]
    pub transcript: LlmTranscript,
}

impl DocArtifacts {
    fn empty(doc_id: &str) -> Self {
        DocArtifacts {
            doc_id: doc_id.to_string(),
            segments: Vec::new(),
            sop: None,
            plan: None,
            problem_pddl: None,
            findings: Vec::new(),
            verdicts: Vec::new(),
            transcript: LlmTranscript::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    pub artifacts: Vec<DocArtifacts>,
}

/// Generates a graph for every document and scores it. A failing stage
/// zeroes the metrics that depend on it and is noted in the row; other
/// documents are unaffected. Rows keep document order.
pub fn evaluate(docs: &[SopDocument], client: Option<&dyn ChatClient>, opts: &EvalOptions) -> Evaluation {
    let results = opts.execution.map_ordered(docs, |_, doc| {
        let Some(client) = client else {
            let mut row = MetricRow::zero(&doc.doc_id, true);
            row.errors.push("generation: no LLM client configured".into());
            return (row, DocArtifacts::empty(&doc.doc_id));
        };
        let recorder = RecordingClient::new(client);
        let client: &dyn ChatClient = &recorder;
        let (row, mut art) = match structure_document(doc, client, &opts.pipeline) {
            Ok((segments, sop)) => {
                let (row, mut art) = score_document(&doc.doc_id, &sop, Some(doc), Some(client), &opts.pipeline);
                art.segments = segments;
                (row, art)
            }
            Err(e) => {
                log::warn!("{}: generation failed: {e}", doc.doc_id);
                let mut row = MetricRow::zero(&doc.doc_id, true);
                row.errors.push(format!("generation: {e}"));
                let mut art = DocArtifacts::empty(&doc.doc_id);
                if let PipelineError::Preflight(f) = e {
                    art.findings = f;
                }
                (row, art)
            }
        };
        art.transcript = recorder.transcript();
        (row, art)
    });
    assemble(results, opts)
}

/// Scores graphs produced elsewhere. `dags` pairs a document id with the
/// graph's JSON text; judges run when a client is given and `docs` holds
/// the document's text. Unparseable graphs score 0.
pub fn score_precomputed(
    dags: &[(String, String)],
    docs: &[SopDocument],
    client: Option<&dyn ChatClient>,
    opts: &EvalOptions,
) -> Evaluation {
    let texts: HashMap<&str, &SopDocument> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let results = opts.execution.map_ordered(dags, |_, (doc_id, json)| match parse_sop_unchecked(json) {
        Ok(sop) => {
            let doc = texts.get(doc_id.as_str()).copied();
            let recorder = client.map(RecordingClient::new);
            let recording = recorder.as_ref().map(|r| r as &dyn ChatClient);
            let (mut row, mut art) = score_document(doc_id, &sop, doc, recording, &opts.pipeline);
            if let Some(r) = &recorder {
                art.transcript = r.transcript();
            }
            if client.is_some() && doc.is_none() {
                row.errors.push(format!("judges: no source text for `{doc_id}`"));
            }
            (row, art)
        }
        Err(e) => {
            let mut row = MetricRow::zero(doc_id, client.is_some());
            row.errors.push(format!("parse: {e}"));
            (row, DocArtifacts::empty(doc_id))
        }
    });
    assemble(results, opts)
}

fn assemble(results: Vec<(MetricRow, DocArtifacts)>, opts: &EvalOptions) -> Evaluation {
    let (rows, artifacts): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Evaluation {
        report: MetricReport::new(opts.run_metadata(), rows),
        artifacts,
    }
}

/// All six metrics for one graph. Judges run only when both a client and
/// the source document are available; a failing judge scores 0.
pub fn score_document(
    doc_id: &str,
    sop: &StructuredSop,
    doc: Option<&SopDocument>,
    client: Option<&dyn ChatClient>,
    cfg: &PipelineConfig,
) -> (MetricRow, DocArtifacts) {
    let det = deterministic_scores(sop);
    let plan = structured_plan_score(sop);
    let mut row = MetricRow::zero(doc_id, false);
    row.structured_plan = plan.score;
    row.dependency = det.dependency_score;
    row.input_from_dependency = det.input_from_dependency_score;
    if let Some(e) = &plan.error {
        row.errors.push(format!("plan: {e}"));
    }

    let mut art = DocArtifacts::empty(doc_id);
    art.problem_pddl = generate_problem(sop).ok().map(|(p, _)| emit_problem(&p));
    art.findings = plan.preflight.iter().cloned().chain(det.findings).collect();

    if let (Some(client), Some(doc)) = (client, doc) {
        type Judge = fn(&StructuredSop, &SopDocument, &dyn ChatClient, &PipelineConfig) -> Result<JudgeVerdict, PipelineError>;
        let judges: [(Metric, &str, Judge); 3] = [
            (Metric::InitialState, "judge_initial_state", judge_initial_state),
            (Metric::GoalState, "judge_goal_state", judge_goal_state),
            (Metric::Completeness, "judge_completeness", judge_completeness),
        ];
        for (metric, name, judge) in judges {
            let score = match judge(sop, doc, client, cfg) {
                Ok(v) => {
                    let s = v.score;
                    art.verdicts.push((metric, v));
                    s
                }
                Err(e) => {
                    row.errors.push(format!("{name}: {e}"));
                    0.0
                }
            };
            match metric {
                Metric::InitialState => row.initial_state = Some(score),
                Metric::GoalState => row.goal_state = Some(score),
                _ => row.completeness = Some(score),
            }
        }
    }
    art.sop = Some(sop.clone());
    art.plan = Some(plan);
    (row, art)
}
