//! Bounded-concurrency batch execution with retries and an append-only
//! checkpoint, shared by generation and feature extraction.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::client::{CompletionRequest, CredentialPool, EndpointError, Evaluator};
use super::{EvalError, ResponseError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientPolicy {
    pub max_concurrent: usize,
    /// Total attempts per call, first try included.
    pub max_attempts: usize,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Completed calls buffered before the checkpoint file is appended to.
    pub checkpoint_interval: usize,
    /// Extra passes over permanently failed calls.
    pub supplementary_rounds: usize,
    pub generation_max_tokens: u32,
    pub evaluation_max_tokens: u32,
    pub temperature: Option<f64>,
}

impl Default for ClientPolicy {
    fn default() -> Self {
        ClientPolicy {
            max_concurrent: 50,
            max_attempts: 5,
            base_delay_ms: 1000,
            max_delay_ms: 60_000,
            checkpoint_interval: 50,
            supplementary_rounds: 1,
            generation_max_tokens: 2048,
            evaluation_max_tokens: 4096,
            temperature: None,
        }
    }
}

impl ClientPolicy {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.max_concurrent == 0 {
            return Err(EvalError::Policy("max_concurrent must be >= 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(EvalError::Policy("max_attempts must be >= 1".into()));
        }
        if self.checkpoint_interval == 0 {
            return Err(EvalError::Policy("checkpoint_interval must be >= 1".into()));
        }
        Ok(())
    }

    /// Delay before retry `k` (1-based): `base · 2^(k−1)`, capped.
    pub fn backoff(&self, retry: usize) -> Duration {
        let factor = 1u64 << (retry.saturating_sub(1)).min(32);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }

    /// Delays between consecutive attempts of one call.
    pub fn backoff_schedule(&self) -> Vec<Duration> {
        (1..self.max_attempts).map(|k| self.backoff(k)).collect()
    }
}

/// Identity of one call: an essay and a run number.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallKey {
    pub essay_id: String,
    pub run_index: u32,
}

impl CallKey {
    pub fn new(essay_id: impl Into<String>, run_index: u32) -> Self {
        CallKey {
            essay_id: essay_id.into(),
            run_index,
        }
    }

    pub fn label(&self) -> String {
        format!("{}#{}", self.essay_id, self.run_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub essay_id: String,
    pub run_index: u32,
    pub raw_response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Append-only line-delimited log of completed calls.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    path: PathBuf,
}

impl Checkpoint {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Checkpoint { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Completed records, first occurrence per key. A torn final line (from
    /// an interrupted write) is skipped.
    pub fn load(&self) -> Result<Vec<CheckpointRecord>, EvalError> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(EvalError::io(&self.path, e)),
        };
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| EvalError::io(&self.path, e))?;
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let last = lines.len();
        for (i, line) in lines.into_iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<CheckpointRecord>(&line) {
                Ok(r) => {
                    if seen.insert((r.essay_id.clone(), r.run_index)) {
                        out.push(r);
                    }
                }
                Err(_) if i + 1 == last => {
                    log::warn!("{}: skipping torn final line", self.path.display());
                }
                Err(e) => {
                    return Err(EvalError::Malformed {
                        path: self.path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    fn append(&self, records: &[CheckpointRecord]) -> Result<(), EvalError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| EvalError::io(&self.path, e))?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).expect("checkpoint records serialize"));
            buf.push('\n');
        }
        f.write_all(buf.as_bytes())
            .and_then(|_| f.sync_data())
            .map_err(|e| EvalError::io(&self.path, e))
    }
}

pub struct Job {
    pub key: CallKey,
    pub request: CompletionRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCall {
    pub key: CallKey,
    pub attempts: usize,
    /// Delays actually waited between attempts, in milliseconds.
    pub backoff_ms: Vec<u64>,
    pub error: String,
}

#[derive(Debug)]
pub struct BatchOutcome<O> {
    /// Successful results in job order, resumed ones included.
    pub completed: Vec<(CallKey, O)>,
    /// Results recovered from the checkpoint instead of being re-issued.
    pub resumed: usize,
    pub failures: Vec<FailedCall>,
    pub aborted: bool,
}

enum CallError {
    Failed(FailedCall),
    Aborted,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// One call with retries. Transient endpoint errors and unusable responses
/// both consume attempts.
fn call_with_retry<O>(
    job: &Job,
    call_index: usize,
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
    parse: &(dyn Fn(&Job, &str) -> Result<O, ResponseError> + Sync),
) -> Result<(String, O), CallError> {
    let credential = credentials.for_call(call_index);
    let mut waited = Vec::new();
    let mut last_error = String::new();
    for attempt in 1..=policy.max_attempts {
        if attempt > 1 {
            let delay = policy.backoff(attempt - 1);
            log::warn!(
                "{}: attempt {} failed ({last_error}); retrying in {:?}",
                job.key.label(),
                attempt - 1,
                delay
            );
            waited.push(delay.as_millis() as u64);
            std::thread::sleep(delay);
        }
        match evaluator.complete(&job.request, credential) {
            Ok(raw) => match parse(job, &raw) {
                Ok(out) => return Ok((raw, out)),
                Err(e) => last_error = e.to_string(),
            },
            Err(EndpointError::Aborted) => return Err(CallError::Aborted),
            Err(EndpointError::Permanent(m)) => {
                last_error = m;
                return Err(CallError::Failed(FailedCall {
                    key: job.key.clone(),
                    attempts: attempt,
                    backoff_ms: waited,
                    error: last_error,
                }));
            }
            Err(e @ EndpointError::Transient(_)) => last_error = e.to_string(),
        }
    }
    log::error!(
        "{}: giving up after {} attempts (backoff ms {:?}): {last_error}",
        job.key.label(),
        policy.max_attempts,
        waited
    );
    Err(CallError::Failed(FailedCall {
        key: job.key.clone(),
        attempts: policy.max_attempts,
        backoff_ms: waited,
        error: last_error,
    }))
}

/// Single call outside a batch.
pub fn call_once<O>(
    job: &Job,
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
    parse: &(dyn Fn(&Job, &str) -> Result<O, ResponseError> + Sync),
) -> Result<O, EvalError> {
    match call_with_retry(job, 0, evaluator, policy, credentials, parse) {
        Ok((_, out)) => Ok(out),
        Err(CallError::Aborted) => Err(EvalError::Aborted),
        Err(CallError::Failed(f)) => Err(EvalError::CallFailed(Box::new(f))),
    }
}

struct Writer<'a> {
    checkpoint: Option<&'a Checkpoint>,
    pending: Vec<CheckpointRecord>,
    interval: usize,
    error: Option<EvalError>,
}

impl Writer<'_> {
    fn push(&mut self, record: CheckpointRecord) {
        self.pending.push(record);
        if self.pending.len() >= self.interval {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if let Some(cp) = self.checkpoint {
            if let Err(e) = cp.append(&self.pending) {
                self.error.get_or_insert(e);
            }
        }
        self.pending.clear();
    }
}

/// Runs `jobs` with at most `policy.max_concurrent` calls in flight.
///
/// Jobs whose key is already in the checkpoint are not re-issued; their
/// stored response is parsed instead. Job `i` always uses credential
/// `i mod pool size`, so the credential sequence does not depend on
/// scheduling. Failed jobs get `supplementary_rounds` further passes.
pub fn run_batch<O: Send>(
    jobs: Vec<Job>,
    evaluator: &dyn Evaluator,
    policy: &ClientPolicy,
    credentials: &CredentialPool,
    checkpoint: Option<&Checkpoint>,
    parse: &(dyn Fn(&Job, &str) -> Result<O, ResponseError> + Sync),
) -> Result<BatchOutcome<O>, EvalError> {
    policy.validate()?;
    let stored = match checkpoint {
        Some(cp) => cp.load()?,
        None => Vec::new(),
    };
    let stored: std::collections::HashMap<(String, u32), String> = stored
        .into_iter()
        .map(|r| ((r.essay_id, r.run_index), r.raw_response))
        .collect();

    let mut results: Vec<Option<O>> = Vec::with_capacity(jobs.len());
    let mut todo = Vec::new();
    let mut resumed = 0;
    for (i, job) in jobs.iter().enumerate() {
        let hit = stored
            .get(&(job.key.essay_id.clone(), job.key.run_index))
            .and_then(|raw| parse(job, raw).ok());
        if hit.is_some() {
            resumed += 1;
        } else {
            todo.push(i);
        }
        results.push(hit);
    }

    let writer = Mutex::new(Writer {
        checkpoint,
        pending: Vec::new(),
        interval: policy.checkpoint_interval,
        error: None,
    });
    let aborted = AtomicBool::new(false);
    let mut failures = Vec::new();
    let slots: Vec<Mutex<Option<O>>> = results.into_iter().map(Mutex::new).collect();

    for round in 0..=policy.supplementary_rounds {
        if todo.is_empty() || aborted.load(Ordering::SeqCst) {
            break;
        }
        if round > 0 {
            log::info!("supplementary round {round}: {} calls", todo.len());
        }
        let next = AtomicUsize::new(0);
        let round_failures = Mutex::new(Vec::new());
        let workers = policy.max_concurrent.min(todo.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if aborted.load(Ordering::SeqCst) {
                        break;
                    }
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&i) = todo.get(k) else { break };
                    let job = &jobs[i];
                    match call_with_retry(job, i, evaluator, policy, credentials, parse) {
                        Ok((raw, out)) => {
                            *slots[i].lock().unwrap() = Some(out);
                            writer.lock().unwrap().push(CheckpointRecord {
                                essay_id: job.key.essay_id.clone(),
                                run_index: job.key.run_index,
                                raw_response: raw,
                                timestamp: now_secs(),
                            });
                        }
                        Err(CallError::Failed(f)) => round_failures.lock().unwrap().push((i, f)),
                        Err(CallError::Aborted) => aborted.store(true, Ordering::SeqCst),
                    }
                });
            }
        });
        let mut rf = round_failures.into_inner().unwrap();
        rf.sort_by_key(|(i, _)| *i);
        todo = rf.iter().map(|(i, _)| *i).collect();
        failures = rf.into_iter().map(|(_, f)| f).collect();
    }

    let mut w = writer.into_inner().unwrap();
    w.flush();
    if let Some(e) = w.error {
        return Err(e);
    }
    if aborted.load(Ordering::SeqCst) {
        // jobs never attempted are not failures; they remain for --resume
        failures.clear();
    }
    let completed = jobs
        .into_iter()
        .zip(slots)
        .filter_map(|(job, slot)| slot.into_inner().unwrap().map(|o| (job.key, o)))
        .collect();
    Ok(BatchOutcome {
        completed,
        resumed,
        failures,
        aborted: aborted.into_inner(),
    })
}
