use serde::{Deserialize, Serialize};

use super::batch::{call_once, run_batch, CallKey, Checkpoint, ClientPolicy, FailedCall, Job};
use super::client::{CompletionRequest, CredentialPool, Evaluator, RequestKind};
use super::prompts::{PromptTemplate, STUDENT_SYSTEM_PROMPT};
use super::{EvalError, ResponseError};
use crate::corpus::{augmented_id, ConditionLabel, EssayRecord, PromptStrategy};

/// Essays to generate for one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRequest {
    pub topic_id: u32,
    pub instructions: String,
    pub n: usize,
}

#[derive(Debug)]
pub struct GenerationOutcome {
    pub records: Vec<EssayRecord>,
    pub failures: Vec<FailedCall>,
    pub resumed: usize,
    pub aborted: bool,
}

impl GenerationOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && !self.aborted
    }
}

pub fn ai_essay_id(topic_id: u32, index: usize) -> String {
    format!("ai-{topic_id}-{index:05}")
}

fn augment_job(essay: &EssayRecord, strategy: PromptStrategy, policy: &ClientPolicy) -> Job {
    let template = PromptTemplate::for_strategy(strategy);
    let key = CallKey::new(augmented_id(&essay.essay_id, strategy), 0);
    Job {
        request: CompletionRequest {
            kind: RequestKind::Generation,
            call_key: key.label(),
            system: template.system().to_string(),
            user: template.render(&essay.text),
            max_tokens: policy.generation_max_tokens,
            temperature: policy.temperature,
        },
        key,
    }
}

fn text_response(_: &Job, raw: &str) -> Result<String, ResponseError> {
    let text = raw.trim();
    if text.is_empty() {
        Err(ResponseError::Empty)
    } else {
        Ok(text.to_string())
    }
}

fn require_human(essay: &EssayRecord) -> Result<(), EvalError> {
    if essay.condition != ConditionLabel::HumanOnly {
        return Err(EvalError::NotHuman(essay.essay_id.clone()));
    }
    Ok(())
}

fn augmented_record(base: &EssayRecord, strategy: PromptStrategy, text: String) -> EssayRecord {
    EssayRecord::new(
        augmented_id(&base.essay_id, strategy),
        base.essay_id.clone(),
        base.topic_id,
        ConditionLabel::HumanPlusAi(strategy),
        text,
    )
    .expect("response text is non-empty")
}

/// Revises one human essay under `strategy`.
pub fn augment_essay(
    essay: &EssayRecord,
    strategy: PromptStrategy,
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
) -> Result<EssayRecord, EvalError> {
    require_human(essay)?;
    let job = augment_job(essay, strategy, policy);
    let text = call_once(&job, evaluator, policy, credentials, &text_response)?;
    Ok(augmented_record(essay, strategy, text))
}

/// Revises every essay under every strategy in `strategies`. Output is in
/// strategy-major, input order.
pub fn augment_batch(
    essays: &[EssayRecord],
    strategies: &[PromptStrategy],
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
    checkpoint: Option<&Checkpoint>,
) -> Result<GenerationOutcome, EvalError> {
    for e in essays {
        require_human(e)?;
    }
    let mut pairs = Vec::new();
    let mut jobs = Vec::new();
    for &s in strategies {
        for e in essays {
            jobs.push(augment_job(e, s, policy));
            pairs.push((augmented_id(&e.essay_id, s), (e, s)));
        }
    }
    let lookup: std::collections::HashMap<String, (&EssayRecord, PromptStrategy)> =
        pairs.into_iter().collect();
    let outcome = run_batch(jobs, evaluator, policy, credentials, checkpoint, &text_response)?;
    let records = outcome
        .completed
        .into_iter()
        .map(|(key, text)| {
            let (base, s) = lookup[&key.essay_id];
            augmented_record(base, s, text)
        })
        .collect();
    Ok(GenerationOutcome {
        records,
        failures: outcome.failures,
        resumed: outcome.resumed,
        aborted: outcome.aborted,
    })
}

/// Writes fresh AI-only essays from topic instructions. Ids are
/// `ai-<topic>-<index>`, numbered from 1 within each topic.
pub fn generate_ai_only(
    requests: &[TopicRequest],
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
    checkpoint: Option<&Checkpoint>,
) -> Result<GenerationOutcome, EvalError> {
    let mut jobs = Vec::new();
    let mut topic_of = std::collections::HashMap::new();
    for req in requests {
        if req.instructions.trim().is_empty() {
            return Err(EvalError::InvalidRequest(format!(
                "topic {} has empty instructions",
                req.topic_id
            )));
        }
        for i in 1..=req.n {
            let key = CallKey::new(ai_essay_id(req.topic_id, i), 0);
            if topic_of.insert(key.essay_id.clone(), req.topic_id).is_some() {
                return Err(EvalError::InvalidRequest(format!(
                    "topic {} requested more than once",
                    req.topic_id
                )));
            }
            jobs.push(Job {
                request: CompletionRequest {
                    kind: RequestKind::Generation,
                    call_key: key.label(),
                    system: STUDENT_SYSTEM_PROMPT.to_string(),
                    user: req.instructions.clone(),
                    max_tokens: policy.generation_max_tokens,
                    temperature: policy.temperature,
                },
                key,
            });
        }
    }
    if jobs.is_empty() {
        return Ok(GenerationOutcome {
            records: Vec::new(),
            failures: Vec::new(),
            resumed: 0,
            aborted: false,
        });
    }
    let outcome = run_batch(jobs, evaluator, policy, credentials, checkpoint, &text_response)?;
    let records = outcome
        .completed
        .into_iter()
        .map(|(key, text)| {
            let topic = topic_of[&key.essay_id];
            EssayRecord::original(key.essay_id, topic, ConditionLabel::AiOnly, text)
                .expect("response text is non-empty")
        })
        .collect();
    Ok(GenerationOutcome {
        records,
        failures: outcome.failures,
        resumed: outcome.resumed,
        aborted: outcome.aborted,
    })
}
