use std::fs::OpenOptions;
use std::io::Write;
use std::time::Duration;

use homogen_core::evalgen::{CredentialPool, Evaluator, HttpEvaluator, MockEvaluator};

use crate::config::{EndpointConfig, EndpointKind};
use crate::error::{io_error, CliError};

pub enum Endpoint {
    Mock(MockEvaluator),
    Http(HttpEvaluator),
}

impl Endpoint {
    pub fn build(cfg: &EndpointConfig, model: &str) -> Result<Self, CliError> {
        match cfg.kind {
            EndpointKind::Mock => {
                let m = &cfg.mock;
                let mut mock = MockEvaluator::new()
                    .with_delay(Duration::from_millis(m.delay_ms))
                    .with_transient_failures(m.transient_failures);
                if m.always_fail {
                    mock = mock.always_failing();
                }
                if let Some(n) = m.abort_after {
                    mock = mock.with_abort_after(n);
                }
                Ok(Endpoint::Mock(mock))
            }
            EndpointKind::Http => {
                let url = cfg.url.clone().ok_or_else(|| CliError::input("endpoint.url is not set"))?;
                let http = HttpEvaluator::new(url, model, Duration::from_secs(cfg.timeout_secs))?;
                Ok(Endpoint::Http(http))
            }
        }
    }

    pub fn evaluator(&self) -> &dyn Evaluator {
        match self {
            Endpoint::Mock(m) => m,
            Endpoint::Http(h) => h,
        }
    }

    /// Writes the mock's call log if one is configured.
    pub fn finish(&self, cfg: &EndpointConfig) -> Result<(), CliError> {
        let (Endpoint::Mock(mock), Some(path)) = (self, &cfg.mock.call_log) else {
            return Ok(());
        };
        log::info!("mock endpoint: {} calls, at most {} in flight", mock.calls(), mock.max_in_flight());
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_error(path, e))?;
        for call in mock.log() {
            writeln!(f, "{}", call.call_key).map_err(|e| io_error(path, e))?;
        }
        Ok(())
    }
}

/// Loads the credential pool from the configured environment variables.
pub fn credentials(cfg: &EndpointConfig) -> Result<CredentialPool, CliError> {
    let pool = CredentialPool::from_env(&cfg.credential_env)?;
    if cfg.kind == EndpointKind::Http && pool.is_empty() {
        log::warn!("no credential_env configured; requests go out unauthenticated");
    }
    Ok(pool)
}
