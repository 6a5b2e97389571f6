//! The JSONL line format for generated instances.

use serde::{Deserialize, Serialize};

use super::{Answer, Domain, GroundedInstance, Question, QuestionType};
use crate::chain::{ChainStep, Premise, Provenance, ReasoningChain, StepType};
use crate::formula::{parse_default, parse_formula, DefaultRule, Formula, ParseError};
use crate::rules::LogicClass;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainRecord {
    pub index: usize,
    pub rule_id: String,
    pub step_type: StepType,
    pub premises_nl: Vec<String>,
    /// Premise formulas followed by the step's defaults in default syntax.
    pub premises_formal: Vec<String>,
    pub conclusion_nl: String,
    pub conclusion_formal: String,
}

/// Formulas behind the rendered text, so tools need no semantic parser.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormalRecord {
    pub context: Vec<Formula>,
    pub visual: Vec<Formula>,
    #[serde(default)]
    pub defaults: Vec<DefaultRule>,
    #[serde(default)]
    pub bridges: Vec<Formula>,
    #[serde(default)]
    pub hypothesis: Option<Formula>,
    #[serde(default)]
    pub options: Vec<Formula>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub id: String,
    pub domain: Domain,
    pub logic_type: LogicClass,
    pub depth: usize,
    pub image_ref: String,
    pub visual_details: Vec<String>,
    pub context: String,
    pub question_type: QuestionType,
    pub question: String,
    pub options: Vec<String>,
    pub answer: Answer,
    pub chain: Vec<ChainRecord>,
    pub formal: FormalRecord,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("step {step}: cannot parse {text:?}: {source}")]
    Parse {
        step: usize,
        text: String,
        source: ParseError,
    },
    #[error("record has no chain steps")]
    EmptyChain,
    #[error("chain step {position} is numbered {index}")]
    Numbering { position: usize, index: usize },
    #[error("depth {depth} does not match {steps} chain steps")]
    Depth { depth: usize, steps: usize },
    #[error("{0}")]
    Shape(String),
}

impl InstanceRecord {
    pub fn new(instance: &GroundedInstance, question: &Question) -> Self {
        let chain = instance
            .chain
            .steps
            .iter()
            .zip(&instance.steps_nl)
            .map(|(s, text)| {
                let mut premises_formal: Vec<String> =
                    s.premises.iter().map(|p| p.formula.to_string()).collect();
                premises_formal.extend(s.defaults.iter().map(|d| d.to_string()));
                ChainRecord {
                    index: s.index,
                    rule_id: s.rule_id.clone(),
                    step_type: s.step_type,
                    premises_nl: text.premises_nl.clone(),
                    premises_formal,
                    conclusion_nl: text.conclusion_nl.clone(),
                    conclusion_formal: s.conclusion.to_string(),
                }
            })
            .collect();
        InstanceRecord {
            id: instance.id.clone(),
            domain: instance.domain,
            logic_type: instance.logic_type,
            depth: instance.depth,
            image_ref: instance.image_ref.clone(),
            visual_details: instance.visual_details.clone(),
            context: instance.context.clone(),
            question_type: question.question_type,
            question: question.text.clone(),
            options: question.options.clone(),
            answer: question.answer,
            chain,
            formal: FormalRecord {
                context: instance.context_formal.clone(),
                visual: instance.visual_formal.clone(),
                defaults: instance.defaults.clone(),
                bridges: instance.bridges.clone(),
                hypothesis: question.hypothesis.clone(),
                options: question.option_formulas.clone(),
            },
        }
    }

    /// Everything the reader is given, as formulas.
    pub fn knowledge(&self) -> Vec<Formula> {
        self.formal
            .context
            .iter()
            .chain(&self.formal.visual)
            .chain(&self.formal.bridges)
            .cloned()
            .collect()
    }

    /// Checks field-level consistency that serde cannot express.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.chain.is_empty() {
            return Err(RecordError::EmptyChain);
        }
        if self.depth != self.chain.len() {
            return Err(RecordError::Depth {
                depth: self.depth,
                steps: self.chain.len(),
            });
        }
        for (i, s) in self.chain.iter().enumerate() {
            if s.index != i {
                return Err(RecordError::Numbering { position: i, index: s.index });
            }
        }
        match (self.question_type, self.answer) {
            (QuestionType::TruthEval, Answer::Label(_)) => {
                if self.formal.hypothesis.is_none() {
                    return Err(RecordError::Shape("truth_eval record lacks formal.hypothesis".into()));
                }
            }
            (QuestionType::MultipleChoice, Answer::Index(i)) => {
                if self.options.len() != 4 || self.formal.options.len() != 4 {
                    return Err(RecordError::Shape("multiple_choice needs exactly 4 options".into()));
                }
                if i >= 4 {
                    return Err(RecordError::Shape(format!("answer index {i} out of range")));
                }
            }
            (t, a) => {
                return Err(RecordError::Shape(format!(
                    "answer {a:?} does not fit question type {}",
                    t.as_str()
                )))
            }
        }
        Ok(())
    }

    /// Rebuilds the formal chain, linking premises to earlier conclusions
    /// and to the image where the text matches.
    pub fn to_chain(&self) -> Result<ReasoningChain, RecordError> {
        self.validate()?;
        let mut steps: Vec<ChainStep> = Vec::new();
        let mut root_premises: Vec<Formula> = Vec::new();
        for (i, s) in self.chain.iter().enumerate() {
            let parse_err = |text: &str, source| RecordError::Parse {
                step: i,
                text: text.to_string(),
                source,
            };
            let mut premises = Vec::new();
            let mut defaults = Vec::new();
            for text in &s.premises_formal {
                if text.contains(':') {
                    defaults.push(parse_default(text).map_err(|e| parse_err(text, e))?);
                    continue;
                }
                let formula = parse_formula(text).map_err(|e| parse_err(text, e))?;
                let provenance = match steps.iter().rposition(|p: &ChainStep| p.conclusion == formula) {
                    Some(j) => Provenance::Derived(j),
                    None if self.formal.visual.contains(&formula) => Provenance::Image,
                    None => Provenance::Context,
                };
                if !matches!(provenance, Provenance::Derived(_)) && !root_premises.contains(&formula) {
                    root_premises.push(formula.clone());
                }
                premises.push(Premise { formula, provenance });
            }
            let conclusion =
                parse_formula(&s.conclusion_formal).map_err(|e| parse_err(&s.conclusion_formal, e))?;
            steps.push(ChainStep {
                index: i,
                rule_id: s.rule_id.clone(),
                premises,
                defaults,
                conclusion,
                step_type: s.step_type,
            });
        }
        let final_conclusion = steps.last().expect("validated non-empty").conclusion.clone();
        Ok(ReasoningChain {
            steps,
            logic_type: self.logic_type,
            root_premises,
            root_defaults: self.formal.defaults.clone(),
            final_conclusion,
        })
    }

    /// The formula whose truth the question asks about: the hypothesis, or
    /// the indicated option.
    pub fn gold_statement(&self) -> Option<&Formula> {
        match self.answer {
            Answer::Label(_) => self.formal.hypothesis.as_ref(),
            Answer::Index(i) => self.formal.options.get(i),
        }
    }
}
