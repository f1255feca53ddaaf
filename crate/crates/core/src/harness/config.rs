use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::DatasetSpec;
use crate::llm::{LlmClientSpec, PipelineConfig, PromptSet};

/// Run configuration, read from a JSON file. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Model endpoint; without one only replayed or precomputed runs work.
    pub client: Option<LlmClientSpec>,
    pub datasets: Vec<DatasetSpec>,
    pub pipeline: PipelineSettings,
    /// Documents evaluated at once.
    pub concurrency: usize,
    pub metadata: MetadataOverrides,
    /// Every model call is appended here as a JSON line.
    pub transcript_path: Option<PathBuf>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            client: None,
            datasets: Vec::new(),
            pipeline: PipelineSettings::default(),
            concurrency: 1,
            metadata: MetadataOverrides::default(),
            transcript_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    /// `null` disables the second segmentation pass.
    pub second_pass_chars: Option<usize>,
    /// Directory of `<name>.<version>.txt` templates overriding the
    /// built-in prompts.
    pub prompt_dir: Option<PathBuf>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            second_pass_chars: Some(6000),
            prompt_dir: None,
        }
    }
}

/// Fixed values for run metadata, so reports can be reproduced byte for
/// byte.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetadataOverrides {
    pub timestamp: Option<String>,
    pub git_revision: Option<String>,
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: HarnessConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut cfg.datasets {
            resolve(&mut d.root_path);
        }
        if let Some(p) = &mut cfg.pipeline.prompt_dir {
            resolve(p);
        }
        if let Some(p) = &mut cfg.transcript_path {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.concurrency == 0 {
            return Err("concurrency must be at least 1".into());
        }
        if let Some(c) = &self.client {
            c.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, String> {
        let prompts = match &self.pipeline.prompt_dir {
            Some(dir) => PromptSet::from_dir(dir).map_err(|e| format!("prompt directory {}: {e}", dir.display()))?,
            None => PromptSet::builtin(),
        };
        let spec = self.client.clone().unwrap_or_default();
        Ok(PipelineConfig {
            model: spec.model,
            temperature: spec.temperature,
            prompts,
            second_pass_chars: self.pipeline.second_pass_chars,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"datasets": [{"name": "r", "root_path": "data", "format": {"type": "plain_text_dir"}}],
                "metadata": {"timestamp": "T"}}"#,
        )
        .unwrap();
        let cfg = HarnessConfig::load(&path).unwrap();
        assert_eq!(cfg.concurrency, 1);
        assert_eq!(cfg.datasets[0].root_path, dir.path().join("data"));
        assert_eq!(cfg.pipeline.second_pass_chars, Some(6000));
        assert_eq!(cfg.metadata.timestamp.as_deref(), Some("T"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"concurency": 2}"#).unwrap();
        assert!(HarnessConfig::load(&path).is_err());
        std::fs::write(&path, r#"{"concurrency": 0}"#).unwrap();
        assert!(HarnessConfig::load(&path).is_err());
        std::fs::write(&path, r#"{"client": {"temperature": -1}}"#).unwrap();
        assert!(HarnessConfig::load(&path).is_err());
    }
}
