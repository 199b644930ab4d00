//! LLM-facing phases: augmentation, AI-only generation and structural
//! feature extraction, plus run aggregation and stability checks.

mod batch;
mod client;
mod extraction;
mod features;
mod generation;
mod prompts;
mod rubric;
mod scores;

use std::path::Path;

pub use batch::{
    call_once, run_batch, BatchOutcome, CallKey, Checkpoint, CheckpointRecord, ClientPolicy,
    FailedCall, Job,
};
pub use client::{
    mock_scores_json, CompletionRequest, Credential, CredentialPool, EndpointError,
    Evaluator, HttpEvaluator, MockCall, MockEvaluator, RequestKind,
};
pub use extraction::{evaluation_request, extract_features, run_extraction, ExtractionOutcome};
pub use features::{
    aggregate_runs, validate_stability, DimensionStability, EssayAggregate, FeatureRow,
    FeatureTable, ScoreRun, StabilityReport, UnstableEssay,
};
pub use generation::{
    augment_batch, augment_essay, generate_ai_only, ai_essay_id, GenerationOutcome, TopicRequest,
};
pub use prompts::{PromptTemplate, ESSAY_PLACEHOLDER, STUDENT_SYSTEM_PROMPT};
pub use rubric::{DimensionDescriptor, EvaluatorRubric, ScaleAnchor, EVALUATOR_SYSTEM_PROMPT};
pub use scores::{parse_scores, DimensionScores};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error("invalid rubric: {0}")]
    Rubric(String),
    #[error("invalid client policy: {0}")]
    Policy(String),
    #[error("credential environment variable {0} is not set")]
    MissingCredential(String),
    #[error("endpoint setup failed: {0}")]
    Endpoint(String),
    #[error("essay {essay_id} has run_index {run_index} more than once")]
    DuplicateRun { essay_id: String, run_index: u32 },
    #[error("no score runs for {} essay(s): {}", .0.len(), preview(.0))]
    MissingRuns(Vec<String>),
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("essay {0} is not a human-only original")]
    NotHuman(String),
    #[error("{} failed after {} attempt(s): {}", .0.key.label(), .0.attempts, .0.error)]
    CallFailed(Box<FailedCall>),
    #[error("batch aborted by endpoint")]
    Aborted,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl EvalError {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        EvalError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

fn preview(ids: &[String]) -> String {
    let mut s = ids.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > 5 {
        s.push_str(", ...");
    }
    s
}

/// Why a model response could not be used.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResponseError {
    #[error("unparsable response: {0}")]
    Unparsable(String),
    #[error("response is missing key \"{0}\"")]
    MissingKey(&'static str),
    #[error("{key} is not numeric: {value}")]
    NotNumeric { key: &'static str, value: String },
    #[error("{key} = {value} outside [{min}, {max}]")]
    OutOfRange {
        key: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("empty response")]
    Empty,
}
