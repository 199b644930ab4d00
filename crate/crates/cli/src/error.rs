use std::fmt;

use homogen_core::corpus::CorpusError;
use homogen_core::evalgen::EvalError;
use homogen_core::pipeline::PipelineError;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DESIGN: u8 = 3;
pub const EXIT_MISSING_CONDITION: u8 = 4;
pub const EXIT_ENDPOINT: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_INPUT, message)
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match e {
            EvalError::Endpoint(_) | EvalError::CallFailed(_) | EvalError::Aborted => EXIT_ENDPOINT,
            _ => EXIT_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::MissingCondition(_) => EXIT_MISSING_CONDITION,
            _ => EXIT_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}
