//! A deterministic iterative solver: pick premises, decide between a rule
//! and a heuristic, take one step, check whether the question is settled.

mod plan;
mod provider;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainStep, Premise, Provenance, ReasoningChain, StepType, HEURISTIC};
use crate::formula::{parse_default, parse_formula, DefaultRule, Formula};
use crate::grounding::{Answer, InstanceRecord, QuestionType, RecordError};
use crate::oracle::{Oracle, OracleError, Status, TruthValue};
use crate::rules::{applicable_rules_with_defaults, LogicClass, RuleHit};

pub use plan::{plan, PlanConfig};
pub use provider::{HeuristicProvider, Proposal, ProviderError, SubprocessProvider};

pub const DEFAULT_MAX_ITERATIONS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverState {
    /// Given premises followed by everything derived, without repeats.
    pub known: Vec<Formula>,
    pub defaults: Vec<DefaultRule>,
    /// How many entries of `known` were given rather than derived.
    pub given: usize,
    pub trace: Vec<ChainStep>,
    pub iteration: usize,
    pub classes: BTreeSet<LogicClass>,
    pub halted: Option<String>,
    /// Remaining steps of the current plan.
    pub agenda: Vec<PlannedStep>,
    /// Set once planning has failed; later steps follow catalog order.
    pub plan_failed: bool,
    pub plan_config: PlanConfig,
}

/// A planned rule application, by formulas rather than positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedStep {
    pub rule_id: &'static str,
    pub premises: Vec<Formula>,
    pub defaults: Vec<usize>,
    pub conclusion: Formula,
}

/// Rule families worth trying for each kind of instance.
pub fn classes_for(logic: LogicClass) -> BTreeSet<LogicClass> {
    match logic {
        LogicClass::PL => BTreeSet::from([LogicClass::PL]),
        LogicClass::FOL => BTreeSet::from([LogicClass::PL, LogicClass::FOL]),
        LogicClass::NM => BTreeSet::from([LogicClass::PL, LogicClass::NM]),
    }
}

impl SolverState {
    pub fn new(premises: Vec<Formula>, defaults: Vec<DefaultRule>, classes: BTreeSet<LogicClass>) -> Self {
        let mut known: Vec<Formula> = Vec::new();
        for p in premises {
            if !known.contains(&p) {
                known.push(p);
            }
        }
        SolverState {
            given: known.len(),
            known,
            defaults,
            trace: Vec::new(),
            iteration: 0,
            classes,
            halted: None,
            agenda: Vec::new(),
            plan_failed: false,
            plan_config: PlanConfig::default(),
        }
    }

    /// Text and image premises of a record, as a fresh state.
    pub fn from_record(record: &InstanceRecord) -> Self {
        let premises = record.formal.context.iter().chain(&record.formal.visual).cloned().collect();
        SolverState::new(premises, record.formal.defaults.clone(), classes_for(record.logic_type))
    }

    /// Formulas derived so far: the accumulated knowledge checked against
    /// the question.
    pub fn derived(&self) -> &[Formula] {
        &self.known[self.given..]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selection {
    Rule(RuleHit),
    /// No rule yields anything new.
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReasoningType {
    Symbolic,
    Heuristic,
    Halt,
}

fn first_novel(state: &SolverState) -> Selection {
    applicable_rules_with_defaults(&state.known, &state.defaults, &state.classes)
        .into_iter()
        .find(|h| !state.known.contains(&h.conclusion))
        .map(Selection::Rule)
        .unwrap_or(Selection::Fallback)
}

fn planned_hit(state: &SolverState, p: &PlannedStep) -> Option<RuleHit> {
    if state.known.contains(&p.conclusion) {
        return None;
    }
    let premises = p
        .premises
        .iter()
        .map(|f| state.known.iter().position(|k| k == f))
        .collect::<Option<Vec<_>>>()?;
    Some(RuleHit {
        rule_id: p.rule_id,
        premises,
        defaults: p.defaults.clone(),
        conclusion: p.conclusion.clone(),
    })
}

/// The selection together with the plan steps left after it.
fn choose(state: &SolverState, goals: &[Formula]) -> (Selection, Option<Vec<PlannedStep>>) {
    if let Some(hit) = state.agenda.first().and_then(|p| planned_hit(state, p)) {
        return (Selection::Rule(hit), Some(state.agenda[1..].to_vec()));
    }
    if !state.plan_failed && !goals.is_empty() {
        if let Some(steps) = plan(&state.known, &state.defaults, &state.classes, goals, &state.plan_config) {
            let mut known = state.known.clone();
            let mut planned = Vec::with_capacity(steps.len());
            for h in &steps {
                planned.push(PlannedStep {
                    rule_id: h.rule_id,
                    premises: h.premises.iter().map(|&i| known[i].clone()).collect(),
                    defaults: h.defaults.clone(),
                    conclusion: h.conclusion.clone(),
                });
                known.push(h.conclusion.clone());
            }
            let first = steps.into_iter().next().expect("plans are non-empty");
            return (Selection::Rule(first), Some(planned.split_off(1)));
        }
        return (first_novel(state), None);
    }
    (first_novel(state), Some(Vec::new()))
}

/// The first step of a shortest-round derivation of one of the goals if
/// the bounded search finds one; otherwise the first rule application, in
/// catalog and premise-index order, whose conclusion is not yet known.
pub fn select_premises(state: &SolverState, goals: &[Formula]) -> Selection {
    choose(state, goals).0
}

pub fn identify_type(selection: &Selection, provider: Option<&dyn HeuristicProvider>) -> ReasoningType {
    match (selection, provider) {
        (Selection::Rule(_), _) => ReasoningType::Symbolic,
        (Selection::Fallback, Some(_)) => ReasoningType::Heuristic,
        (Selection::Fallback, None) => ReasoningType::Halt,
    }
}

fn provenance(state: &SolverState, f: &Formula) -> Provenance {
    match state.trace.iter().rposition(|s| &s.conclusion == f) {
        Some(j) => Provenance::Derived(j),
        None => Provenance::Context,
    }
}

/// One iteration: extends the state by a single new formula or halts it.
pub fn step(state: &mut SolverState, goals: &[Formula], provider: Option<&dyn HeuristicProvider>) {
    if state.halted.is_some() {
        return;
    }
    state.iteration += 1;
    let (selection, agenda) = choose(state, goals);
    match agenda {
        Some(a) => state.agenda = a,
        None => {
            state.agenda.clear();
            state.plan_failed = true;
        }
    }
    match (identify_type(&selection, provider), selection) {
        (ReasoningType::Symbolic, Selection::Rule(hit)) => {
            let premises = hit
                .premises
                .iter()
                .map(|&i| Premise {
                    formula: state.known[i].clone(),
                    provenance: provenance(state, &state.known[i]),
                })
                .collect();
            let defaults = hit.defaults.iter().map(|&i| state.defaults[i].clone()).collect();
            state.trace.push(ChainStep {
                index: state.trace.len(),
                rule_id: hit.rule_id.to_string(),
                premises,
                defaults,
                conclusion: hit.conclusion.clone(),
                step_type: StepType::Symbolic,
            });
            state.known.push(hit.conclusion);
        }
        (ReasoningType::Heuristic, _) => {
            let provider = provider.expect("heuristic type implies a provider");
            match provider.propose(&state.known, goals) {
                Ok(Some(p)) if !state.known.contains(&p.formula) => {
                    let premises = p
                        .premises
                        .iter()
                        .filter(|f| state.known.contains(f))
                        .map(|f| Premise {
                            formula: f.clone(),
                            provenance: provenance(state, f),
                        })
                        .collect();
                    state.trace.push(ChainStep {
                        index: state.trace.len(),
                        rule_id: HEURISTIC.to_string(),
                        premises,
                        defaults: Vec::new(),
                        conclusion: p.formula.clone(),
                        step_type: StepType::Heuristic,
                    });
                    state.known.push(p.formula);
                }
                Ok(Some(_)) => state.halted = Some("provider repeated a known formula".into()),
                Ok(None) => state.halted = Some("no rule applies and the provider declined".into()),
                Err(e) => state.halted = Some(format!("provider failed: {e}")),
            }
        }
        _ => state.halted = Some("no rule applies and no provider is configured".into()),
    }
}

/// A solver answer; `Unresolved` marks a multiple-choice question that
/// could not be narrowed to one option.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Predicted {
    Answer(Answer),
    Other(Unresolved),
}

impl Predicted {
    /// Reads a label case-insensitively.
    pub fn parse_label(s: &str) -> Option<Predicted> {
        let label = match s.trim().to_ascii_lowercase().as_str() {
            "true" => TruthValue::True,
            "false" => TruthValue::False,
            "unknown" => TruthValue::Unknown,
            "unresolved" => return Some(Predicted::UNRESOLVED),
            _ => return None,
        };
        Some(Predicted::Answer(Answer::Label(label)))
    }
}

impl<'de> Deserialize<'de> for Predicted {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => {
                Predicted::parse_label(&s).ok_or_else(|| D::Error::custom(format!("unknown label {s:?}")))
            }
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|i| Predicted::Answer(Answer::Index(i as usize)))
                .ok_or_else(|| D::Error::custom(format!("option index {n} is not a natural number"))),
            other => Err(D::Error::custom(format!("answer must be a label or an option index, got {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unresolved {
    Unresolved,
}

impl Predicted {
    pub const UNRESOLVED: Predicted = Predicted::Other(Unresolved::Unresolved);
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("malformed instance: {0}")]
    Record(#[from] RecordError),
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub answer: Predicted,
    pub trace: Vec<ChainStep>,
    pub iterations: usize,
    pub halted: Option<String>,
}

fn entailed(oracle: &Oracle, k: &[Formula], f: &Formula) -> Result<bool, OracleError> {
    let v = oracle.entails(k, &[], f)?;
    match v.status {
        Status::Entailed => Ok(true),
        Status::NotEntailed => Ok(false),
        Status::Undetermined => Err(OracleError::BudgetExhausted),
    }
}

/// The answer settled by the derived knowledge, if any.
fn settled(record: &InstanceRecord, state: &SolverState, oracle: &Oracle) -> Result<Option<Predicted>, SolveError> {
    let k = state.derived();
    if k.is_empty() {
        return Ok(None);
    }
    match record.question_type {
        QuestionType::TruthEval => {
            let h = record.formal.hypothesis.as_ref().expect("validated record");
            if entailed(oracle, k, h)? {
                return Ok(Some(Predicted::Answer(Answer::Label(TruthValue::True))));
            }
            if entailed(oracle, k, &h.negated())? {
                return Ok(Some(Predicted::Answer(Answer::Label(TruthValue::False))));
            }
            Ok(None)
        }
        QuestionType::MultipleChoice => {
            let mut hits = Vec::new();
            for (i, o) in record.formal.options.iter().enumerate() {
                if entailed(oracle, k, o)? {
                    hits.push(i);
                }
            }
            Ok(match hits.as_slice() {
                [one] => Some(Predicted::Answer(Answer::Index(*one))),
                _ => None,
            })
        }
    }
}

pub fn solve(
    record: &InstanceRecord,
    provider: Option<&dyn HeuristicProvider>,
    max_iterations: usize,
) -> Result<Solution, SolveError> {
    solve_with(record, provider, max_iterations, &Oracle::default())
}

pub fn solve_with(
    record: &InstanceRecord,
    provider: Option<&dyn HeuristicProvider>,
    max_iterations: usize,
    oracle: &Oracle,
) -> Result<Solution, SolveError> {
    if max_iterations == 0 {
        return Err(SolveError::NoIterations);
    }
    record.validate()?;
    let goals = match record.question_type {
        QuestionType::TruthEval => {
            let h = record.formal.hypothesis.clone().expect("validated record");
            vec![h.negated(), h]
        }
        QuestionType::MultipleChoice => record.formal.options.clone(),
    };
    let mut state = SolverState::from_record(record);
    let mut answer = None;
    while state.iteration < max_iterations && state.halted.is_none() {
        step(&mut state, &goals, provider);
        if let Some(a) = settled(record, &state, oracle)? {
            answer = Some(a);
            break;
        }
    }
    let answer = answer.unwrap_or(match record.question_type {
        QuestionType::TruthEval => Predicted::Answer(Answer::Label(TruthValue::Unknown)),
        QuestionType::MultipleChoice => Predicted::UNRESOLVED,
    });
    Ok(Solution {
        answer,
        trace: state.trace,
        iterations: state.iteration,
        halted: state.halted,
    })
}

/// Solves records in parallel; results keep the input order.
pub fn solve_records(
    records: &[InstanceRecord],
    provider: Option<&dyn HeuristicProvider>,
    max_iterations: usize,
    oracle: &Oracle,
) -> Vec<Result<PredictionRecord, SolveError>> {
    use rayon::prelude::*;
    records
        .par_iter()
        .map(|r| solve_with(r, provider, max_iterations, oracle).map(|s| PredictionRecord::new(&r.id, &s)))
        .collect()
}

/// One solver step in the prediction file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    pub index: usize,
    pub rule_id: String,
    pub step_type: StepType,
    pub premises_formal: Vec<String>,
    pub conclusion_formal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conclusion_nl: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub answer: Predicted,
    pub trace: Vec<TraceStep>,
}

impl PredictionRecord {
    pub fn new(id: &str, solution: &Solution) -> Self {
        PredictionRecord {
            id: id.to_string(),
            answer: solution.answer,
            trace: solution.trace.iter().map(trace_step).collect(),
        }
    }

    /// Scores an instance's own gold chain as if it were a prediction.
    pub fn from_gold(record: &InstanceRecord) -> Self {
        PredictionRecord {
            id: record.id.clone(),
            answer: Predicted::Answer(record.answer),
            trace: record
                .chain
                .iter()
                .map(|s| TraceStep {
                    index: s.index,
                    rule_id: s.rule_id.clone(),
                    step_type: s.step_type,
                    premises_formal: s.premises_formal.clone(),
                    conclusion_formal: s.conclusion_formal.clone(),
                    conclusion_nl: Some(s.conclusion_nl.clone()),
                })
                .collect(),
        }
    }
}

pub fn trace_step(s: &ChainStep) -> TraceStep {
    let mut premises_formal: Vec<String> = s.premises.iter().map(|p| p.formula.to_string()).collect();
    premises_formal.extend(s.defaults.iter().map(|d| d.to_string()));
    TraceStep {
        index: s.index,
        rule_id: s.rule_id.clone(),
        step_type: s.step_type,
        premises_formal,
        conclusion_formal: s.conclusion.to_string(),
        conclusion_nl: None,
    }
}

/// Rebuilds a chain from a prediction trace for verification.
pub fn trace_chain(trace: &[TraceStep], logic_type: LogicClass) -> Result<ReasoningChain, RecordError> {
    let mut steps: Vec<ChainStep> = Vec::new();
    let mut root_premises = Vec::new();
    let mut root_defaults = Vec::new();
    for (i, t) in trace.iter().enumerate() {
        let err = |text: &str, source| RecordError::Parse {
            step: i,
            text: text.to_string(),
            source,
        };
        let mut premises = Vec::new();
        let mut defaults = Vec::new();
        for text in &t.premises_formal {
            if text.contains(':') {
                let d = parse_default(text).map_err(|e| err(text, e))?;
                if !root_defaults.contains(&d) {
                    root_defaults.push(d.clone());
                }
                defaults.push(d);
                continue;
            }
            let formula = parse_formula(text).map_err(|e| err(text, e))?;
            let provenance = match steps.iter().rposition(|s| s.conclusion == formula) {
                Some(j) => Provenance::Derived(j),
                None => {
                    if !root_premises.contains(&formula) {
                        root_premises.push(formula.clone());
                    }
                    Provenance::Context
                }
            };
            premises.push(Premise { formula, provenance });
        }
        let conclusion = parse_formula(&t.conclusion_formal).map_err(|e| err(&t.conclusion_formal, e))?;
        steps.push(ChainStep {
            index: i,
            rule_id: t.rule_id.clone(),
            premises,
            defaults,
            conclusion,
            step_type: t.step_type,
        });
    }
    let final_conclusion = steps.last().map(|s| s.conclusion.clone()).ok_or(RecordError::EmptyChain)?;
    Ok(ReasoningChain {
        steps,
        logic_type,
        root_premises,
        root_defaults,
        final_conclusion,
    })
}

#[cfg(test)]
mod tests;
