use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::transcript::{prompt_hash, LlmTranscript};
use super::{ChatClient, ChatRequest, Completion, LlmError};

type Responder = Box<dyn Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync>;

enum Mode {
    /// Responses keyed by prompt hash, served first-in first-out; the last
    /// response for a hash is repeated once the others are used up.
    Replay(Mutex<HashMap<String, VecDeque<(String, u64)>>>),
    Script(Responder),
    Queue(Mutex<VecDeque<Result<String, LlmError>>>),
}

/// Deterministic stand-in for a model endpoint.
pub struct MockClient {
    mode: Mode,
}

impl MockClient {
    pub fn replay(transcript: &LlmTranscript) -> Self {
        let mut by_hash: HashMap<String, VecDeque<(String, u64)>> = HashMap::new();
        for e in transcript.entries() {
            by_hash
                .entry(e.prompt_hash.clone())
                .or_default()
                .push_back((e.response_text.clone(), e.latency_ms));
        }
        MockClient {
            mode: Mode::Replay(Mutex::new(by_hash)),
        }
    }

    /// Answers each request with `f(request)`.
    pub fn scripted(f: impl Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        MockClient {
            mode: Mode::Script(Box::new(f)),
        }
    }

    /// Answers requests with `responses` in order, regardless of prompt.
    pub fn queue(responses: impl IntoIterator<Item = Result<String, LlmError>>) -> Self {
        MockClient {
            mode: Mode::Queue(Mutex::new(responses.into_iter().collect())),
        }
    }

    /// Shorthand for a queue of successful responses.
    pub fn answers<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::queue(responses.into_iter().map(|s| Ok(s.into())))
    }
}

impl ChatClient for MockClient {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        match &self.mode {
            Mode::Replay(table) => {
                let hash = prompt_hash(&request.prompt_text());
                let mut table = table.lock().expect("mock lock");
                let queue = table
                    .get_mut(&hash)
                    .filter(|q| !q.is_empty())
                    .ok_or(LlmError::ReplayMiss { hash })?;
                let (text, latency_ms) = if queue.len() > 1 {
                    queue.pop_front().expect("nonempty")
                } else {
                    queue[0].clone()
                };
                Ok(Completion { text, latency_ms })
            }
            Mode::Script(f) => f(request).map(|text| Completion { text, latency_ms: 0 }),
            Mode::Queue(q) => {
                let next = q
                    .lock()
                    .expect("mock lock")
                    .pop_front()
                    .unwrap_or_else(|| Err(LlmError::Response("mock response queue exhausted".into())));
                next.map(|text| Completion { text, latency_ms: 0 })
            }
        }
    }
}
