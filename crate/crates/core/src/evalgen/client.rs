//! Evaluator endpoints: the trait the batch runner talks to, an HTTP
//! implementation for chat-completion style APIs, and a deterministic mock.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::EvalError;
use crate::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Generation,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub kind: RequestKind,
    /// Stable identity of the call, e.g. `essay_id#run_index`.
    pub call_key: String,
    pub system: String,
    pub user: String,
    pub max_tokens: u32,
    /// Left unset to use the endpoint's default sampling.
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndpointError {
    /// Worth retrying: timeouts, rate limits, 5xx.
    Transient(String),
    /// Retrying cannot help: bad request, auth failure.
    Permanent(String),
    /// Stop the whole batch; completed work is kept.
    Aborted,
}

impl fmt::Display for EndpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndpointError::Transient(m) => write!(f, "transient endpoint failure: {m}"),
            EndpointError::Permanent(m) => write!(f, "endpoint failure: {m}"),
            EndpointError::Aborted => f.write_str("batch aborted"),
        }
    }
}

/// An API key plus the name it was loaded under. The secret never appears in
/// `Debug` output.
#[derive(Clone)]
pub struct Credential {
    label: String,
    secret: String,
}

impl Credential {
    pub fn new(label: impl Into<String>, secret: impl Into<String>) -> Self {
        Credential {
            label: label.into(),
            secret: secret.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn secret(&self) -> &str {
        &self.secret
    }
}

impl fmt::Debug for Credential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Credential({}: ***)", self.label)
    }
}

/// Ordered credentials handed out round-robin by call index.
#[derive(Debug, Clone, Default)]
pub struct CredentialPool {
    credentials: Vec<Credential>,
}

impl CredentialPool {
    pub fn new(credentials: Vec<Credential>) -> Self {
        CredentialPool { credentials }
    }

    /// Reads each named environment variable. Fails on the first missing one,
    /// naming the variable.
    pub fn from_env(names: &[String]) -> Result<Self, EvalError> {
        let credentials = names
            .iter()
            .map(|name| {
                std::env::var(name)
                    .map(|secret| Credential::new(name.clone(), secret))
                    .map_err(|_| EvalError::MissingCredential(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(CredentialPool { credentials })
    }

    pub fn len(&self) -> usize {
        self.credentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.credentials.is_empty()
    }

    pub fn for_call(&self, index: usize) -> Option<&Credential> {
        if self.credentials.is_empty() {
            None
        } else {
            Some(&self.credentials[index % self.credentials.len()])
        }
    }
}

pub trait Evaluator: Send + Sync {
    fn complete(
        &self,
        request: &CompletionRequest,
        credential: Option<&Credential>,
    ) -> Result<String, EndpointError>;
}

/// Chat-completion endpoint over HTTP.
///
/// Sends `{model, messages: [system, user], max_completion_tokens[, temperature]}`
/// and reads `choices[0].message.content`. 429 and 5xx responses are
/// transient; other non-success statuses are permanent.
pub struct HttpEvaluator {
    url: String,
    model: String,
    client: reqwest::blocking::Client,
}

impl HttpEvaluator {
    pub fn new(url: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Result<Self, EvalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EvalError::Endpoint(e.to_string()))?;
        Ok(HttpEvaluator {
            url: url.into(),
            model: model.into(),
            client,
        })
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "max_completion_tokens": request.max_tokens,
        });
        if let Some(t) = request.temperature {
            body["temperature"] = json!(t);
        }
        body
    }
}

impl Evaluator for HttpEvaluator {
    fn complete(
        &self,
        request: &CompletionRequest,
        credential: Option<&Credential>,
    ) -> Result<String, EndpointError> {
        let mut req = self.client.post(&self.url).json(&self.request_body(request));
        if let Some(c) = credential {
            req = req.bearer_auth(c.secret());
        }
        let resp = req
            .send()
            .map_err(|e| EndpointError::Transient(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let msg = format!("HTTP {status}");
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                EndpointError::Transient(msg)
            } else {
                EndpointError::Permanent(msg)
            });
        }
        let body: Value = resp
            .json()
            .map_err(|e| EndpointError::Transient(format!("unreadable response body: {e}")))?;
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| EndpointError::Transient("response has no choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockCall {
    pub call_key: String,
    pub credential: Option<String>,
}

/// Deterministic stand-in for an LLM endpoint.
///
/// Generation requests echo the user prompt followed by a revision marker.
/// Evaluation requests return a JSON score object derived from a hash of the
/// prompt (essay-level level) and the call key (run-level jitter of at most
/// one scale point). Instrumented for concurrency and call-log assertions.
#[derive(Default)]
pub struct MockEvaluator {
    delay: Duration,
    transient_failures: usize,
    always_fail: bool,
    abort_after: Option<usize>,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    failures_by_key: Mutex<HashMap<String, usize>>,
    log: Mutex<Vec<MockCall>>,
}

impl MockEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Each call key fails transiently this many times before succeeding.
    pub fn with_transient_failures(mut self, n: usize) -> Self {
        self.transient_failures = n;
        self
    }

    pub fn always_failing(mut self) -> Self {
        self.always_fail = true;
        self
    }

    /// Calls after the first `n` return [`EndpointError::Aborted`].
    pub fn with_abort_after(mut self, n: usize) -> Self {
        self.abort_after = Some(n);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn log(&self) -> Vec<MockCall> {
        self.log.lock().unwrap().clone()
    }

    fn respond(&self, request: &CompletionRequest) -> String {
        match request.kind {
            RequestKind::Generation => {
                format!("{} [revised by mock {}]", request.user.trim(), request.call_key)
            }
            RequestKind::Evaluation => mock_scores_json(&request.user, &request.call_key),
        }
    }
}

/// Score object the mock returns for a prompt and call key.
pub fn mock_scores_json(prompt: &str, call_key: &str) -> String {
    let level = Sha256::digest(prompt.as_bytes());
    let jitter = Sha256::digest(call_key.as_bytes());
    let mut obj = serde_json::Map::new();
    for (i, dim) in Dimension::ALL.into_iter().enumerate() {
        let (lo, hi) = dim.bounds();
        let span = (hi - lo) as u8 - 1;
        let base = lo + 1.0 + (level[i] % span) as f64;
        let delta = (jitter[i] % 3) as f64 - 1.0;
        obj.insert(dim.key().into(), json!((base + delta).clamp(lo, hi)));
    }
    Value::Object(obj).to_string()
}

impl Evaluator for MockEvaluator {
    fn complete(
        &self,
        request: &CompletionRequest,
        credential: Option<&Credential>,
    ) -> Result<String, EndpointError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if self.abort_after.is_some_and(|limit| n > limit) {
            return Err(EndpointError::Aborted);
        }
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        self.log.lock().unwrap().push(MockCall {
            call_key: request.call_key.clone(),
            credential: credential.map(|c| c.label().to_string()),
        });
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let fail = self.always_fail || {
            let mut seen = self.failures_by_key.lock().unwrap();
            let count = seen.entry(request.call_key.clone()).or_insert(0);
            *count += 1;
            *count <= self.transient_failures
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        if fail {
            Err(EndpointError::Transient("mock failure".into()))
        } else {
            Ok(self.respond(request))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalgen::parse_scores;

    #[test]
    fn mock_scores_are_valid_and_deterministic() {
        for k in 0..50 {
            let key = format!("e{k}#0");
            let a = mock_scores_json("essay text", &key);
            assert_eq!(a, mock_scores_json("essay text", &key));
            parse_scores(&a).unwrap();
        }
    }

    #[test]
    fn credentials_are_redacted_and_round_robin() {
        let pool = CredentialPool::new(vec![Credential::new("K1", "sekrit1"), Credential::new("K2", "sekrit2")]);
        assert_eq!(pool.for_call(0).unwrap().label(), "K1");
        assert_eq!(pool.for_call(3).unwrap().label(), "K2");
        assert!(!format!("{pool:?}").contains("sekrit"));
        assert!(CredentialPool::default().for_call(5).is_none());
        let err = CredentialPool::from_env(&["HOMOGEN_TEST_SURELY_UNSET".into()]).unwrap_err();
        assert!(err.to_string().contains("HOMOGEN_TEST_SURELY_UNSET"));
    }

    #[test]
    fn http_body_shape() {
        let ev = HttpEvaluator::new("http://127.0.0.1:9", "m", Duration::from_secs(1)).unwrap();
        let req = CompletionRequest {
            kind: RequestKind::Evaluation,
            call_key: "e#0".into(),
            system: "sys".into(),
            user: "usr".into(),
            max_tokens: 4096,
            temperature: None,
        };
        let body = ev.request_body(&req);
        assert_eq!(body["max_completion_tokens"], 4096);
        assert_eq!(body["messages"][1]["content"], "usr");
        assert!(body.get("temperature").is_none());
    }
}
