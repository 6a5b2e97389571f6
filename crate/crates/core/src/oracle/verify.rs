//! Step-by-step checking of reasoning chains.

use serde::{Deserialize, Serialize};

use crate::chain::{Provenance, ReasoningChain, StepType};
use crate::rules::{catalog, matches_step, LogicClass};

use super::{DefaultTheory, Oracle, OracleError, Status};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub index: usize,
    pub step_type: StepType,
    /// Whether the rule's schema re-matches; absent for heuristic steps.
    pub rule_match: Option<bool>,
    /// Oracle verdict on premises entailing the conclusion; absent for
    /// heuristic steps or when the rule did not match.
    pub entailment: Option<Status>,
    pub reason: Option<String>,
}

impl StepVerdict {
    pub fn ok(&self) -> bool {
        self.reason.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Overall {
    Sound,
    Unsound { step: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub steps: Vec<StepVerdict>,
    pub overall: Overall,
}

impl VerificationReport {
    pub fn is_sound(&self) -> bool {
        self.overall == Overall::Sound
    }
}

pub fn verify_chain(chain: &ReasoningChain) -> VerificationReport {
    verify_chain_with(chain, &Oracle::default())
}

/// Checks every symbolic step by schema re-matching and by the oracle of
/// its rule's class. An undetermined oracle verdict counts as a failure.
pub fn verify_chain_with(chain: &ReasoningChain, oracle: &Oracle) -> VerificationReport {
    let mut steps = Vec::with_capacity(chain.steps.len());
    for (pos, step) in chain.steps.iter().enumerate() {
        let mut v = StepVerdict {
            index: step.index,
            step_type: step.step_type,
            rule_match: None,
            entailment: None,
            reason: None,
        };
        if step.index != pos {
            v.reason = Some(format!("step index {} at position {pos}", step.index));
            steps.push(v);
            continue;
        }
        let mut link_error = None;
        for p in &step.premises {
            if let Provenance::Derived(j) = p.provenance {
                if j >= pos {
                    link_error = Some(format!("premise derived from later step {j}"));
                } else if chain.steps[j].conclusion != p.formula {
                    link_error = Some(format!("premise {} is not the conclusion of step {j}", p.formula));
                }
            }
        }
        if let Some(e) = link_error {
            v.reason = Some(e);
            steps.push(v);
            continue;
        }
        if step.step_type == StepType::Heuristic {
            steps.push(v);
            continue;
        }
        let Some(rule) = catalog().get(&step.rule_id) else {
            v.reason = Some(format!("unknown rule {}", step.rule_id));
            steps.push(v);
            continue;
        };
        let premises = step.premise_formulas();
        let matched = matches_step(rule, &premises, &step.defaults, &step.conclusion);
        v.rule_match = Some(matched);
        if !matched {
            v.reason = Some("rule-match failed".into());
            steps.push(v);
            continue;
        }
        let verdict = match rule.logic_class {
            LogicClass::PL => match oracle.pl_entails(&premises, &step.conclusion) {
                Err(OracleError::AtomCap { .. }) => oracle.pl_entails_search(&premises, &step.conclusion),
                other => other,
            },
            LogicClass::FOL => {
                if premises.iter().all(|p| p.is_quantifier_free()) && step.conclusion.is_quantifier_free() {
                    oracle.pl_entails_search(&premises, &step.conclusion)
                } else {
                    oracle.fol_entails_finite(&premises, &step.conclusion, oracle.config.max_domain)
                }
            }
            LogicClass::NM => {
                let theory = DefaultTheory::split(&premises, &step.defaults);
                let constants = super::theory_constants(&premises, &step.defaults, Some(&step.conclusion));
                oracle.default_entails(&theory, &constants, &step.conclusion)
            }
        };
        match verdict {
            Ok(e) => {
                v.entailment = Some(e.status);
                match e.status {
                    Status::Entailed => {}
                    Status::NotEntailed => v.reason = Some("entailment failed".into()),
                    Status::Undetermined => v.reason = Some("entailment undetermined".into()),
                }
            }
            Err(e) => v.reason = Some(format!("oracle error: {e}")),
        }
        steps.push(v);
    }
    let overall = steps
        .iter()
        .find(|s| !s.ok())
        .map(|s| Overall::Unsound {
            step: s.index,
            reason: s.reason.clone().unwrap_or_default(),
        })
        .unwrap_or(Overall::Sound);
    VerificationReport { steps, overall }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{compose_chain, ChainStep, Premise};
    use crate::formula::parse_formula;

    #[test]
    fn mp_mp_is_sound() {
        let c = compose_chain(&["MP", "MP"]).unwrap();
        let r = verify_chain(&c);
        assert!(r.is_sound(), "{r:?}");
        assert!(r.steps.iter().all(|s| s.entailment == Some(Status::Entailed)));
    }

    #[test]
    fn mislabeled_step() {
        let mut c = compose_chain(&["MP", "MP"]).unwrap();
        let f = |s: &str| parse_formula(s).unwrap();
        c.steps[0] = ChainStep {
            index: 0,
            rule_id: "MP".into(),
            premises: vec![
                Premise {
                    formula: f("p1 -> p2"),
                    provenance: Provenance::Context,
                },
                Premise {
                    formula: f("p2"),
                    provenance: Provenance::Context,
                },
            ],
            defaults: vec![],
            conclusion: f("p1"),
            step_type: StepType::Symbolic,
        };
        let r = verify_chain(&c);
        assert_eq!(
            r.overall,
            Overall::Unsound {
                step: 0,
                reason: "rule-match failed".into()
            }
        );
    }

    #[test]
    fn heuristic_steps_are_exempt() {
        let cfg = crate::chain::ChainConfig {
            heuristic_rate: 1.0,
            ..Default::default()
        };
        let c = crate::chain::sample_chain(3, LogicClass::PL, 1, &cfg).unwrap();
        assert_eq!(c.steps[1].step_type, StepType::Heuristic);
        let r = verify_chain(&c);
        assert!(r.is_sound());
        assert_eq!(r.steps[1].step_type, StepType::Heuristic);
        assert_eq!(r.steps[1].entailment, None);
    }
}
