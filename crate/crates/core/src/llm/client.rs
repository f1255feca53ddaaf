use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::transcript::{LlmTranscript, TranscriptEntry};
use super::{ChatClient, ChatRequest, Completion, LlmError};

pub const ENDPOINT_ENV: &str = "SOPSTRUCT_LLM_ENDPOINT";
pub const KEY_ENV: &str = "SOPSTRUCT_LLM_KEY";

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmClientSpec {
    /// Falls back to `SOPSTRUCT_LLM_ENDPOINT` when absent.
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_s: u64,
}

impl Default for LlmClientSpec {
    fn default() -> Self {
        LlmClientSpec {
            endpoint: None,
            model: "gpt-4".into(),
            temperature: 0.0,
            max_retries: 2,
            timeout_s: 120,
        }
    }
}

impl LlmClientSpec {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(LlmError::Config(format!(
                "temperature must be a finite number >= 0, got {}",
                self.temperature
            )));
        }
        if self.model.trim().is_empty() {
            return Err(LlmError::Config("model name is empty".into()));
        }
        Ok(())
    }

    /// The configured endpoint, else the one in the environment.
    pub fn resolved_endpoint(&self) -> Option<String> {
        self.endpoint
            .clone()
            .or_else(|| std::env::var(ENDPOINT_ENV).ok())
            .filter(|e| !e.trim().is_empty())
    }
}

/// Blocking client for OpenAI-style `chat/completions` endpoints.
///
/// Sends `{model, messages, temperature}` and reads the first choice's
/// `message.content` (or `text`). Transport errors, HTTP 429 and 5xx are
/// retried with exponential backoff.
pub struct HttpClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    max_retries: u32,
}

impl HttpClient {
    pub fn from_spec(spec: &LlmClientSpec) -> Result<Self, LlmError> {
        spec.validate()?;
        let endpoint = spec
            .resolved_endpoint()
            .ok_or_else(|| LlmError::Config(format!("no endpoint configured and {ENDPOINT_ENV} is unset")))?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(spec.timeout_s.max(1)))
            .build();
        Ok(HttpClient {
            agent,
            endpoint,
            api_key: std::env::var(KEY_ENV).ok().filter(|k| !k.is_empty()),
            max_retries: spec.max_retries,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, LlmError> {
        let mut req = self.agent.post(&self.endpoint).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = match req.send_json(body.clone()) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(LlmError::Status { status, body });
            }
            Err(e) => return Err(LlmError::Transport(e.to_string())),
        };
        let value: Value = resp
            .into_json()
            .map_err(|e| LlmError::Response(format!("body is not JSON: {e}")))?;
        response_text(&value)
    }
}

fn retryable(e: &LlmError) -> bool {
    match e {
        LlmError::Transport(_) => true,
        LlmError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

pub(crate) fn response_text(value: &Value) -> Result<String, LlmError> {
    let choice = value
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::Response("missing choices[0]".into()))?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Response("choices[0] has no message content".into()))
}

impl ChatClient for HttpClient {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        latency_ms: started.elapsed().as_millis() as u64,
                    })
                }
                Err(e) if retryable(&e) && attempt < self.max_retries => {
                    log::warn!("LLM call failed ({e}); retry {} of {}", attempt + 1, self.max_retries);
                    std::thread::sleep(Duration::from_millis(250 << attempt.min(6)));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Wraps a client and records every successful call.
pub struct RecordingClient<C> {
    inner: C,
    transcript: Mutex<LlmTranscript>,
    sink: Option<PathBuf>,
}

impl<C: ChatClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        RecordingClient {
            inner,
            transcript: Mutex::new(LlmTranscript::new()),
            sink: None,
        }
    }

    /// Also appends each entry to the JSON-lines file at `path`.
    pub fn with_sink(mut self, path: impl Into<PathBuf>) -> Self {
        self.sink = Some(path.into());
        self
    }

    pub fn transcript(&self) -> LlmTranscript {
        self.transcript.lock().expect("transcript lock").clone()
    }

    pub fn calls(&self) -> usize {
        self.transcript.lock().expect("transcript lock").len()
    }
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        let out = self.inner.complete(request)?;
        let entry = TranscriptEntry::new(request.prompt_text(), out.text.clone(), out.latency_ms);
        if let Some(path) = &self.sink {
            if let Err(e) = LlmTranscript::append_to(path, &entry) {
                log::warn!("could not append to transcript {}: {e}", path.display());
            }
        }
        self.transcript.lock().expect("transcript lock").push(entry);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_message_content_or_text() {
        let chat = json!({"choices": [{"message": {"role": "assistant", "content": "hi"}}]});
        assert_eq!(response_text(&chat).unwrap(), "hi");
        let legacy = json!({"choices": [{"text": "yo"}]});
        assert_eq!(response_text(&legacy).unwrap(), "yo");
        assert!(response_text(&json!({"choices": []})).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = LlmClientSpec::default();
        assert!(spec.validate().is_ok());
        spec.temperature = -0.1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn retry_policy() {
        assert!(retryable(&LlmError::Status { status: 503, body: String::new() }));
        assert!(retryable(&LlmError::Status { status: 429, body: String::new() }));
        assert!(!retryable(&LlmError::Status { status: 400, body: String::new() }));
        assert!(!retryable(&LlmError::Response(String::new())));
    }

    #[test]
    fn unreachable_endpoint_fails_after_retries() {
        let spec = LlmClientSpec {
            endpoint: Some("http://127.0.0.1:9/v1/chat/completions".into()),
            max_retries: 1,
            timeout_s: 1,
            ..LlmClientSpec::default()
        };
        let client = HttpClient::from_spec(&spec).unwrap();
        let req = ChatRequest {
            model: "m".into(),
            temperature: 0.0,
            messages: vec![super::super::Message::user("x")],
        };
        assert!(matches!(client.complete(&req), Err(LlmError::Transport(_))));
    }
}
