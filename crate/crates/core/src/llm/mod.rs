//! LLM-backed segmentation, structure generation and judging.
//!
//! Every model call goes through [`ChatClient`]. [`HttpClient`] talks to a
//! chat-completion endpoint; [`MockClient`] replays a recorded
//! [`LlmTranscript`] or scripted answers so the whole pipeline runs
//! deterministically offline. Prompts are versioned text templates
//! ([`PromptSet`]).

mod client;
pub mod extract;
mod judge;
mod mock;
mod prompts;
mod segment;
mod structure;
mod transcript;

use serde::{Deserialize, Serialize};

use crate::sop::SopError;
use crate::validators::Finding;

pub use client::{HttpClient, LlmClientSpec, RecordingClient, ENDPOINT_ENV, KEY_ENV};
pub use judge::{judge_completeness, judge_goal_state, judge_initial_state, parse_verdict, JudgeVerdict};
pub use mock::MockClient;
pub use prompts::{render, PromptSet};
pub use segment::{locate_segments, segment, SegmentSpan};
pub use structure::{generate_structure, merge, structure_document, SubtaskSummary};
pub use transcript::{prompt_hash, LlmTranscript, TranscriptEntry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: "system".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<Message>,
}

impl ChatRequest {
    /// The text a transcript records and hashes: each message as
    /// `[role]` on its own line followed by its content.
    pub fn prompt_text(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.messages.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push('[');
            out.push_str(&m.role);
            out.push_str("]\n");
            out.push_str(&m.content);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
}

/// A chat-completion backend. Implementations must be safe to share
/// between worker threads.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        (**self).complete(request)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for Box<C> {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        (**self).complete(request)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for std::sync::Arc<C> {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("no recorded response for prompt {hash}")]
    ReplayMiss { hash: String },
    #[error("client not configured: {0}")]
    Config(String),
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("segment anchor not found in document: {anchor:?}")]
    AnchorNotFound { anchor: String },
    #[error("text at character {offset} is not covered by any segment")]
    CoverageGap { offset: usize },
    #[error("model output does not match the schema: {}", findings.join("; "))]
    Schema { findings: Vec<String> },
    #[error("subtask id `{id}` is declared by more than one segment")]
    IdCollision { id: String },
    #[error(transparent)]
    Graph(#[from] SopError),
    #[error("merged graph fails preflight: {}", .0.iter().map(|f| format!("{}: {}", f.subtask_id, f.detail)).collect::<Vec<_>>().join("; "))]
    Preflight(Vec<Finding>),
    #[error("judge response unusable: {0}")]
    JudgeParse(String),
    #[error("prompt template error: {0}")]
    Prompt(String),
}

/// Model settings and prompts shared by every pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model: String,
    pub temperature: f64,
    pub prompts: PromptSet,
    /// Segments longer than this many characters are segmented once more.
    /// `None` disables the second pass.
    pub second_pass_chars: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: "mock".into(),
            temperature: 0.0,
            prompts: PromptSet::builtin(),
            second_pass_chars: Some(6000),
        }
    }
}

impl PipelineConfig {
    pub(crate) fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            temperature: self.temperature,
            messages: vec![Message::user(prompt)],
        }
    }

    pub(crate) fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, PipelineError> {
        self.prompts.render(name, vars).map_err(PipelineError::Prompt)
    }
}
