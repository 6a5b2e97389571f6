//! Heuristic providers supply commonsense steps the rules cannot.

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::process::{run, RunError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub formula: Formula,
    #[serde(default)]
    pub justification: String,
    /// Known formulas the step rests on, if the provider says.
    #[serde(default)]
    pub premises: Vec<Formula>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider transport failed: {0}")]
    Transport(String),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("provider reply is not a proposal: {0}")]
    Malformed(String),
}

/// Given what is known and the goal, proposes one new formula or declines.
pub trait HeuristicProvider: Sync {
    fn propose(&self, known: &[Formula], goals: &[Formula]) -> Result<Option<Proposal>, ProviderError>;
}

#[derive(Serialize)]
struct Request<'a> {
    known: &'a [Formula],
    goals: &'a [Formula],
}

/// Runs a command per query. The request is one JSON object
/// `{"known": [...], "goals": [...]}` on stdin; the reply on stdout is
/// `null` or `{"formula": "...", "justification": "...", "premises": [...]}`.
#[derive(Clone, Debug)]
pub struct SubprocessProvider {
    pub program: String,
    pub args: Vec<String>,
    pub timeout_ms: u64,
}

impl SubprocessProvider {
    pub fn from_command_line(cmd: &str, timeout_ms: u64) -> Option<Self> {
        let mut parts = shlex::split(cmd)?.into_iter();
        Some(SubprocessProvider {
            program: parts.next()?,
            args: parts.collect(),
            timeout_ms,
        })
    }
}

impl HeuristicProvider for SubprocessProvider {
    fn propose(&self, known: &[Formula], goals: &[Formula]) -> Result<Option<Proposal>, ProviderError> {
        let request = serde_json::to_string(&Request { known, goals }).expect("formulas serialize");
        let out = run(&self.program, &self.args, &format!("{request}\n"), self.timeout_ms).map_err(|e| match e {
            RunError::Timeout => ProviderError::Timeout(self.timeout_ms),
            RunError::Transport(m) => ProviderError::Transport(m),
        })?;
        let reply = out.trim();
        if reply.is_empty() {
            return Ok(None);
        }
        serde_json::from_str::<Option<Proposal>>(reply).map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}
