//! Automatic quality control: lexical redundancy between chain steps and
//! an external plausibility score per step.

mod scorer;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::grounding::{GroundedInstance, InstanceRecord, StepText};

pub use scorer::{
    step_hash, CachedScorer, HttpScorer, PlausibilityScorer, ReplayScorer, ScorerConfig, ScorerError,
    SubprocessScorer, Transcript, TranscriptEntry,
};

/// Lower-cased whitespace tokens with surrounding punctuation removed.
pub fn tokens(s: &str) -> BTreeSet<String> {
    s.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Jaccard similarity of the token sets of `a` and `b`; two empty sets
/// count as identical.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let a = tokens(a);
    let b = tokens(b);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Step pairs strictly above this similarity are redundant.
    pub similarity_threshold: f64,
    /// Steps strictly below this plausibility are implausible.
    pub plausibility_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            similarity_threshold: 0.5,
            plausibility_threshold: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Reason {
    LexicalSimilarity { steps: (usize, usize), score: f64 },
    Plausibility { step: usize, score: f64 },
    ScorerFailure { step: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlausibilityCheck {
    /// No scorer configured.
    Skipped,
    /// Not needed: the instance was already rejected.
    NotRun,
    Checked,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub verdict: Verdict,
    pub reasons: Vec<Reason>,
    pub plausibility: PlausibilityCheck,
}

impl FilterDecision {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("filtering needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
}

/// The text of one step as seen by each check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTexts {
    /// Compared pairwise for redundancy: the step's conclusion.
    pub similarity: String,
    /// Sent to the plausibility scorer: the whole inference.
    pub plausibility: String,
}

pub fn instance_steps(instance: &GroundedInstance) -> Vec<StepTexts> {
    instance
        .steps_nl
        .iter()
        .map(|s| StepTexts {
            similarity: s.conclusion_nl.clone(),
            plausibility: s.full_text(),
        })
        .collect()
}

pub fn record_steps(record: &InstanceRecord) -> Vec<StepTexts> {
    record
        .chain
        .iter()
        .map(|s| {
            let text = StepText {
                premises_nl: s.premises_nl.clone(),
                conclusion_nl: s.conclusion_nl.clone(),
            };
            StepTexts {
                similarity: text.conclusion_nl.clone(),
                plausibility: text.full_text(),
            }
        })
        .collect()
}

pub fn filter_steps(
    steps: &[StepTexts],
    scorer: Option<&dyn PlausibilityScorer>,
    config: &FilterConfig,
) -> Result<FilterDecision, FilterError> {
    if steps.len() < 2 {
        return Err(FilterError::TooFewSteps(steps.len()));
    }
    let mut reasons = Vec::new();
    for i in 0..steps.len() {
        for j in i + 1..steps.len() {
            let score = jaccard(&steps[i].similarity, &steps[j].similarity);
            if score > config.similarity_threshold {
                reasons.push(Reason::LexicalSimilarity { steps: (i, j), score });
            }
        }
    }
    let Some(scorer) = scorer else {
        let verdict = if reasons.is_empty() { Verdict::Accepted } else { Verdict::Rejected };
        return Ok(FilterDecision {
            verdict,
            reasons,
            plausibility: PlausibilityCheck::Skipped,
        });
    };
    if !reasons.is_empty() {
        return Ok(FilterDecision {
            verdict: Verdict::Rejected,
            reasons,
            plausibility: PlausibilityCheck::NotRun,
        });
    }
    for (i, s) in steps.iter().enumerate() {
        match scorer.score(&s.plausibility) {
            Ok(score) if score < config.plausibility_threshold => {
                reasons.push(Reason::Plausibility { step: i, score });
            }
            Ok(_) => {}
            Err(e) => {
                reasons.push(Reason::ScorerFailure {
                    step: i,
                    message: e.to_string(),
                });
                return Ok(FilterDecision {
                    verdict: Verdict::Undecided,
                    reasons,
                    plausibility: PlausibilityCheck::Failed,
                });
            }
        }
    }
    let verdict = if reasons.is_empty() { Verdict::Accepted } else { Verdict::Rejected };
    Ok(FilterDecision {
        verdict,
        reasons,
        plausibility: PlausibilityCheck::Checked,
    })
}

pub fn filter_instance(
    instance: &GroundedInstance,
    scorer: Option<&dyn PlausibilityScorer>,
    config: &FilterConfig,
) -> Result<FilterDecision, FilterError> {
    filter_steps(&instance_steps(instance), scorer, config)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn steps(texts: &[&str]) -> Vec<StepTexts> {
        texts
            .iter()
            .map(|t| StepTexts {
                similarity: t.to_string(),
                plausibility: t.to_string(),
            })
            .collect()
    }

    struct Fixed(BTreeMap<String, f64>);

    impl PlausibilityScorer for Fixed {
        fn score(&self, text: &str) -> Result<f64, ScorerError> {
            self.0.get(text).copied().ok_or_else(|| ScorerError::Transport("unreachable".into()))
        }
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard("a b c", "a b d"), 0.5);
        assert_eq!(jaccard("The cat.", "the CAT"), 1.0);
        assert_eq!(jaccard("x y", "z"), 0.0);
        assert_eq!(jaccard("", "  ... "), 1.0);
        assert_eq!(jaccard("", "a"), 0.0);
    }

    #[test]
    fn similarity_threshold_is_strict() {
        let d = filter_steps(&steps(&["a b c", "a b d"]), None, &FilterConfig::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Accepted);
        assert_eq!(d.plausibility, PlausibilityCheck::Skipped);
        let d = filter_steps(&steps(&["a b c", "a b c d e"]), None, &FilterConfig::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Rejected);
        assert_eq!(d.reasons, vec![Reason::LexicalSimilarity { steps: (0, 1), score: 0.6 }]);
    }

    #[test]
    fn plausibility() {
        let s = steps(&["alpha beta", "gamma delta", "epsilon zeta"]);
        let scores = Fixed(BTreeMap::from([
            ("alpha beta".to_string(), 0.9),
            ("gamma delta".to_string(), 0.8),
            ("epsilon zeta".to_string(), 0.3),
        ]));
        let d = filter_steps(&s, Some(&scores), &FilterConfig::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Rejected);
        assert_eq!(d.reasons, vec![Reason::Plausibility { step: 2, score: 0.3 }]);
        let partial = Fixed(BTreeMap::from([("alpha beta".to_string(), 0.9)]));
        let d = filter_steps(&s, Some(&partial), &FilterConfig::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Undecided);
        assert_eq!(d.plausibility, PlausibilityCheck::Failed);
    }

    #[test]
    fn needs_two_steps() {
        assert_eq!(
            filter_steps(&steps(&["x"]), None, &FilterConfig::default()),
            Err(FilterError::TooFewSteps(1))
        );
    }
}
