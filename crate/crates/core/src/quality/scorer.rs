//! Plausibility scorers: external processes, HTTP endpoints, and a
//! hash-keyed cache that doubles as a replayable transcript.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::process::{run, RunError};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ScorerError {
    #[error("scorer transport failed: {0}")]
    Transport(String),
    #[error("scorer timed out after {0} ms")]
    Timeout(u64),
    #[error("scorer replied {0:?}, not a decimal in [0, 1]")]
    Malformed(String),
    #[error("no recorded response for step {0}")]
    NotRecorded(String),
}

/// Scores one step of natural-language reasoning in [0, 1].
pub trait PlausibilityScorer: Sync {
    fn score(&self, text: &str) -> Result<f64, ScorerError>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub timeout_ms: u64,
    /// Extra attempts after a transport failure or timeout.
    pub retries: u32,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            timeout_ms: 10_000,
            retries: 2,
        }
    }
}

fn parse_score(reply: &str) -> Result<f64, ScorerError> {
    let line = reply.lines().next().unwrap_or("").trim();
    match line.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(ScorerError::Malformed(line.to_string())),
    }
}

fn with_retries(retries: u32, mut call: impl FnMut() -> Result<f64, ScorerError>) -> Result<f64, ScorerError> {
    let mut last = None;
    for _ in 0..=retries {
        match call() {
            Ok(v) => return Ok(v),
            Err(e @ ScorerError::Malformed(_)) => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Runs a command per step: the step text goes to stdin as one line, the
/// first line of stdout is the score.
#[derive(Clone, Debug)]
pub struct SubprocessScorer {
    pub program: String,
    pub args: Vec<String>,
    pub config: ScorerConfig,
}

impl SubprocessScorer {
    /// Splits a command line with shell quoting rules.
    pub fn from_command_line(cmd: &str, config: ScorerConfig) -> Option<Self> {
        let mut parts = shlex::split(cmd)?.into_iter();
        let program = parts.next()?;
        Some(SubprocessScorer {
            program,
            args: parts.collect(),
            config,
        })
    }

    fn once(&self, text: &str) -> Result<f64, ScorerError> {
        let line = format!("{}\n", text.replace('\n', " "));
        match run(&self.program, &self.args, &line, self.config.timeout_ms) {
            Ok(out) => parse_score(&out),
            Err(RunError::Timeout) => Err(ScorerError::Timeout(self.config.timeout_ms)),
            Err(RunError::Transport(m)) => Err(ScorerError::Transport(m)),
        }
    }
}

impl PlausibilityScorer for SubprocessScorer {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        with_retries(self.config.retries, || self.once(text))
    }
}

/// POSTs the step text as `text/plain`; the response body is the score.
#[derive(Clone, Debug)]
pub struct HttpScorer {
    pub url: String,
    pub config: ScorerConfig,
}

impl PlausibilityScorer for HttpScorer {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(self.config.timeout_ms))
            .build();
        with_retries(self.config.retries, || {
            let resp = agent
                .post(&self.url)
                .set("Content-Type", "text/plain; charset=utf-8")
                .send_string(text)
                .map_err(|e| ScorerError::Transport(e.to_string()))?;
            let body = resp.into_string().map_err(|e| ScorerError::Transport(e.to_string()))?;
            parse_score(&body)
        })
    }
}

/// Hex SHA-256 of a step text.
pub fn step_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Scorer responses keyed by step hash.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: BTreeMap<String, TranscriptEntry>,
}

/// Caches responses of an inner scorer by step hash and records them.
pub struct CachedScorer<S> {
    inner: S,
    cache: Mutex<Transcript>,
}

impl<S: PlausibilityScorer> CachedScorer<S> {
    pub fn new(inner: S) -> Self {
        CachedScorer {
            inner,
            cache: Mutex::new(Transcript::default()),
        }
    }

    pub fn transcript(&self) -> Transcript {
        self.cache.lock().expect("cache lock").clone()
    }
}

impl<S: PlausibilityScorer> PlausibilityScorer for CachedScorer<S> {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        let key = step_hash(text);
        if let Some(e) = self.cache.lock().expect("cache lock").entries.get(&key) {
            if let Some(s) = e.score {
                return Ok(s);
            }
        }
        let result = self.inner.score(text);
        let entry = TranscriptEntry {
            text: text.to_string(),
            score: result.as_ref().ok().copied(),
            error: result.as_ref().err().map(|e| e.to_string()),
        };
        self.cache.lock().expect("cache lock").entries.insert(key, entry);
        result
    }
}

/// Answers from a recorded transcript only.
pub struct ReplayScorer {
    transcript: Transcript,
}

impl ReplayScorer {
    pub fn new(transcript: Transcript) -> Self {
        ReplayScorer { transcript }
    }
}

impl PlausibilityScorer for ReplayScorer {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        let key = step_hash(text);
        match self.transcript.entries.get(&key) {
            Some(TranscriptEntry { score: Some(s), .. }) => Ok(*s),
            Some(TranscriptEntry { error: Some(e), .. }) => Err(ScorerError::Transport(e.clone())),
            _ => Err(ScorerError::NotRecorded(key)),
        }
    }
}
