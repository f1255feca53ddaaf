use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of the prompt text.
pub fn prompt_hash(prompt_text: &str) -> String {
    hex::encode(Sha256::digest(prompt_text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt_hash: String,
    pub prompt_text: String,
    pub response_text: String,
    pub latency_ms: u64,
}

impl TranscriptEntry {
    pub fn new(prompt_text: impl Into<String>, response_text: impl Into<String>, latency_ms: u64) -> Self {
        let prompt_text = prompt_text.into();
        TranscriptEntry {
            prompt_hash: prompt_hash(&prompt_text),
            prompt_text,
            response_text: response_text.into(),
            latency_ms,
        }
    }
}

/// Append-only log of model calls, stored as JSON lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LlmTranscript {
    entries: Vec<TranscriptEntry>,
}

impl LlmTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: TranscriptEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entries always serialize") + "\n")
            .collect()
    }

    /// Parses JSON lines, skipping blank ones. Entries whose hash does not
    /// match their prompt are rejected.
    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: TranscriptEntry =
                serde_json::from_str(line).map_err(|err| format!("line {}: {err}", i + 1))?;
            if e.prompt_hash != prompt_hash(&e.prompt_text) {
                return Err(format!("line {}: prompt_hash does not match prompt_text", i + 1));
            }
            entries.push(e);
        }
        Ok(LlmTranscript { entries })
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_jsonl(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Appends one entry to a transcript file, creating it if needed.
    pub fn append_to(path: &Path, entry: &TranscriptEntry) -> io::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let line = serde_json::to_string(entry).expect("entries always serialize");
        writeln!(f, "{line}")
    }
}

impl Extend<TranscriptEntry> for LlmTranscript {
    fn extend<I: IntoIterator<Item = TranscriptEntry>>(&mut self, iter: I) {
        self.entries.extend(iter);
    }
}
