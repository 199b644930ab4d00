//! Run configuration: one TOML document covering paths, endpoint, client
//! policy and analysis parameters. Flags override it field by field.

use std::path::{Path, PathBuf};

use homogen_core::corpus::PromptStrategy;
use homogen_core::evalgen::{ClientPolicy, TopicRequest};
use homogen_core::pipeline::AnalysisConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Vec<PathBuf>,
    pub features: Option<PathBuf>,
    /// Directory every command writes into.
    pub out: PathBuf,
    /// Defaults to `<out>/<command>.checkpoint.jsonl`.
    pub checkpoint: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: Vec::new(),
            features: None,
            out: PathBuf::from("out"),
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointKind {
    #[default]
    Mock,
    Http,
}

/// Knobs of the built-in deterministic endpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockOptions {
    /// Calls past this count fail with an abort, simulating an interruption.
    pub abort_after: Option<usize>,
    pub delay_ms: u64,
    pub transient_failures: usize,
    pub always_fail: bool,
    /// Appends one line per issued call (`essay_id#run`).
    pub call_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub kind: EndpointKind,
    pub url: Option<String>,
    /// Model used by `augment` and `generate-ai`.
    pub generation_model: String,
    /// Model used by `evaluate`.
    pub evaluation_model: String,
    pub timeout_secs: u64,
    /// Environment variables holding API keys, used round-robin. Only the
    /// names are ever stored.
    pub credential_env: Vec<String>,
    pub mock: MockOptions,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            kind: EndpointKind::Mock,
            url: None,
            generation_model: "gpt-5-mini".into(),
            evaluation_model: "gpt-5".into(),
            timeout_secs: 120,
            credential_env: Vec::new(),
            mock: MockOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub runs: u32,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig { runs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub strategies: Vec<PromptStrategy>,
    pub topics: Vec<TopicRequest>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            strategies: PromptStrategy::ALL.to_vec(),
            topics: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub endpoint: EndpointConfig,
    pub policy: ClientPolicy,
    pub evaluate: EvaluateConfig,
    pub generate: GenerateConfig,
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.policy.validate().map_err(CliError::from)?;
        self.analysis.validate().map_err(|e| CliError::input(e.to_string()))?;
        if self.evaluate.runs == 0 {
            return Err(CliError::input("evaluate.runs must be >= 1"));
        }
        if self.endpoint.kind == EndpointKind::Http && self.endpoint.url.is_none() {
            return Err(CliError::input("endpoint.url is required for an http endpoint"));
        }
        Ok(())
    }

    pub fn checkpoint_path(&self, command: &str) -> PathBuf {
        self.paths
            .checkpoint
            .clone()
            .unwrap_or_else(|| self.paths.out.join(format!("{command}.checkpoint.jsonl")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}
