use std::fmt;
use std::io;
use std::path::Path;

use harness_evo_core::inner::InnerError;
use harness_evo_core::meta::MetaError;
use harness_evo_core::metrics::MetricsError;
use harness_evo_core::AgentError;

/// Process exit codes. Stable: scripts may rely on them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Io = 1,
    Config = 2,
    Agent = 3,
    ResumeMismatch = 4,
    Locked = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: ExitCode,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(exit: ExitCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            exit,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Config, "config_invalid", message)
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        Self::new(
            ExitCode::Io,
            "io_error",
            format!("{}: {err}", path.display()),
        )
    }

    fn classify(code: String, message: String) -> Self {
        let exit = match code.as_str() {
            "resume_mismatch" => ExitCode::ResumeMismatch,
            "blueprint_invalid" | "task_invalid" | "config_invalid" | "train_test_overlap"
            | "empty_aggregate" => ExitCode::Config,
            "io_error" => ExitCode::Io,
            _ => ExitCode::Agent,
        };
        CliError {
            exit,
            code,
            message,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<InnerError> for CliError {
    fn from(e: InnerError) -> Self {
        Self::classify(e.code(), e.to_string())
    }
}

impl From<MetaError> for CliError {
    fn from(e: MetaError) -> Self {
        Self::classify(e.code(), e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::classify(e.code(), e.to_string())
    }
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        Self::classify(e.code(), e.to_string())
    }
}
