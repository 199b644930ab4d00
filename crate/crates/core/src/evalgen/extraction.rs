use super::batch::{call_once, run_batch, CallKey, Checkpoint, ClientPolicy, FailedCall, Job};
use super::client::{CompletionRequest, CredentialPool, Evaluator, RequestKind};
use super::features::{aggregate_runs, FeatureTable, ScoreRun};
use super::rubric::{EvaluatorRubric, EVALUATOR_SYSTEM_PROMPT};
use super::scores::{parse_scores, DimensionScores};
use super::{EvalError, ResponseError};
use crate::corpus::{CorpusSet, EssayRecord};

pub fn evaluation_request(
    essay: &EssayRecord,
    run_index: u32,
    rubric: &EvaluatorRubric,
    policy: &ClientPolicy,
) -> Job {
    let key = CallKey::new(essay.essay_id.clone(), run_index);
    Job {
        request: CompletionRequest {
            kind: RequestKind::Evaluation,
            call_key: key.label(),
            system: EVALUATOR_SYSTEM_PROMPT.to_string(),
            user: rubric.render_prompt(&essay.text),
            max_tokens: policy.evaluation_max_tokens,
            temperature: policy.temperature,
        },
        key,
    }
}

fn parse_job(_: &Job, raw: &str) -> Result<DimensionScores, ResponseError> {
    if raw.trim().is_empty() {
        return Err(ResponseError::Empty);
    }
    parse_scores(raw)
}

/// Scores one essay once.
pub fn extract_features(
    essay: &EssayRecord,
    rubric: &EvaluatorRubric,
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
) -> Result<DimensionScores, EvalError> {
    rubric.validate()?;
    let job = evaluation_request(essay, 0, rubric, policy);
    call_once(&job, evaluator, policy, credentials, &parse_job)
}

#[derive(Debug)]
pub struct ExtractionOutcome {
    pub runs: Vec<ScoreRun>,
    /// Essays with at least one run; essays with none are left out and
    /// listed in `incomplete`.
    pub table: FeatureTable,
    pub failures: Vec<FailedCall>,
    pub incomplete: Vec<String>,
    pub resumed: usize,
    pub aborted: bool,
}

impl ExtractionOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.incomplete.is_empty() && !self.aborted
    }
}

/// Scores every essay `runs` times.
pub fn run_extraction(
    corpus: &CorpusSet,
    runs: u32,
    rubric: &EvaluatorRubric,
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
    checkpoint: Option<&Checkpoint>,
) -> Result<ExtractionOutcome, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::InvalidRequest("corpus is empty".into()));
    }
    if runs == 0 {
        return Err(EvalError::InvalidRequest("runs must be >= 1".into()));
    }
    rubric.validate()?;
    let jobs: Vec<Job> = corpus
        .records()
        .iter()
        .flat_map(|e| (0..runs).map(move |r| (e, r)))
        .map(|(e, r)| evaluation_request(e, r, rubric, policy))
        .collect();
    let outcome = run_batch(jobs, evaluator, policy, credentials, checkpoint, &parse_job)?;
    let score_runs: Vec<ScoreRun> = outcome
        .completed
        .into_iter()
        .map(|(key, scores)| ScoreRun {
            essay_id: key.essay_id,
            run_index: key.run_index,
            scores,
        })
        .collect();
    let aggregates = aggregate_runs(&score_runs)?;
    let (table, incomplete) = FeatureTable::join_partial(corpus, aggregates);
    Ok(ExtractionOutcome {
        runs: score_runs,
        table,
        failures: outcome.failures,
        incomplete,
        resumed: outcome.resumed,
        aborted: outcome.aborted,
    })
}
