//! Abstract reasoning chains built by threading rule conclusions into
//! later premise slots.

mod sample;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{
    apply_substitution, match_schema, DefaultRule, Formula, Pred, Substitution, Term,
};
use crate::rules::{catalog, Family, LogicClass, RuleSchema, SchemaBody};

pub use sample::{sample_chain, ChainConfig};

/// Rule id recorded on commonsense bridging steps.
pub const HEURISTIC: &str = "HEURISTIC";

pub const MIN_DEPTH: usize = 2;
pub const MAX_DEPTH: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepType {
    Symbolic,
    Heuristic,
}

impl StepType {
    pub fn as_str(self) -> &'static str {
        match self {
            StepType::Symbolic => "symbolic",
            StepType::Heuristic => "heuristic",
        }
    }
}

/// Where a step premise comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Context,
    Image,
    Derived(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premise {
    pub formula: Formula,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub index: usize,
    pub rule_id: String,
    pub premises: Vec<Premise>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub defaults: Vec<DefaultRule>,
    pub conclusion: Formula,
    pub step_type: StepType,
}

impl ChainStep {
    pub fn premise_formulas(&self) -> Vec<Formula> {
        self.premises.iter().map(|p| p.formula.clone()).collect()
    }

    /// The implication a heuristic step takes for granted.
    pub fn bridge(&self) -> Option<Formula> {
        if self.step_type != StepType::Heuristic {
            return None;
        }
        let antecedent = self
            .premises
            .iter()
            .map(|p| p.formula.clone())
            .reduce(Formula::and)?;
        Some(Formula::implies(antecedent, self.conclusion.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub steps: Vec<ChainStep>,
    pub logic_type: LogicClass,
    pub root_premises: Vec<Formula>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub root_defaults: Vec<DefaultRule>,
    pub final_conclusion: Formula,
}

impl ReasoningChain {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn heuristic_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.step_type == StepType::Heuristic)
            .count()
    }

    pub fn bridges(&self) -> Vec<Formula> {
        self.steps.iter().filter_map(ChainStep::bridge).collect()
    }

    pub fn rule_ids(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.rule_id.as_str()).collect()
    }

    /// Re-links root premises to the given provenance, e.g. after choosing
    /// which of them an image carries.
    pub fn set_provenance(&mut self, premise: &Formula, provenance: Provenance) {
        for step in &mut self.steps {
            for p in &mut step.premises {
                if !matches!(p.provenance, Provenance::Derived(_)) && &p.formula == premise {
                    p.provenance = provenance;
                }
            }
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("unknown rule id {0:?}")]
    UnknownRule(String),
    #[error("chain depth {0} outside 2..=9")]
    DepthOutOfRange(usize),
    #[error("{next} has no premise slot accepting the conclusion of {previous}")]
    Incompatible { previous: String, next: String },
    #[error("no compatible {class} rule sequence of depth {depth}")]
    NoCompatibleSequence { depth: usize, class: LogicClass },
}

/// Fresh-symbol supply. Counters start at 1 for each kind.
#[derive(Clone, Debug)]
pub(crate) struct Fresh {
    atoms: usize,
    preds: usize,
    consts: usize,
    /// Propositional metavariables become atoms over a single constant,
    /// allocated on first use.
    ground_mode: bool,
    ground: Option<String>,
}

impl Fresh {
    pub(crate) fn propositional() -> Self {
        Fresh {
            atoms: 0,
            preds: 0,
            consts: 0,
            ground_mode: false,
            ground: None,
        }
    }

    pub(crate) fn ground_atoms() -> Self {
        Fresh {
            ground_mode: true,
            ..Fresh::propositional()
        }
    }

    pub(crate) fn for_class(class: LogicClass) -> Self {
        match class {
            LogicClass::PL => Fresh::propositional(),
            _ => Fresh::ground_atoms(),
        }
    }

    pub(crate) fn atom(&mut self) -> Formula {
        if !self.ground_mode {
            self.atoms += 1;
            return Formula::prop(format!("p{}", self.atoms));
        }
        let c = match &self.ground {
            Some(c) => c.clone(),
            None => {
                let c = self.constant();
                self.ground = Some(c.clone());
                c
            }
        };
        Formula::pred(self.predicate(), vec![Term::Const(c)])
    }

    pub(crate) fn predicate(&mut self) -> String {
        self.preds += 1;
        format!("P{}", self.preds)
    }

    pub(crate) fn constant(&mut self) -> String {
        self.consts += 1;
        format!("c{}", self.consts)
    }
}

enum MetaSlot {
    Formula(String),
    Predicate(String),
    Constant(String),
}

fn collect_metas(f: &Formula, out: &mut Vec<MetaSlot>) {
    f.visit(&mut |g| match g {
        Formula::Meta(m) => out.push(MetaSlot::Formula(m.clone())),
        Formula::Atom(p, args) => {
            if let Pred::Meta(m) = p {
                out.push(MetaSlot::Predicate(m.clone()));
            }
            for t in args {
                if let Term::Meta(m) = t {
                    out.push(MetaSlot::Constant(m.clone()));
                }
            }
        }
        _ => {}
    });
}

/// Binds every metavariable not yet in `s` to a fresh symbol, in order of
/// first appearance.
pub(crate) fn complete_fresh<'a>(
    schemas: impl IntoIterator<Item = &'a Formula>,
    s: &mut Substitution,
    fresh: &mut Fresh,
) {
    let mut metas = Vec::new();
    for f in schemas {
        collect_metas(f, &mut metas);
    }
    for m in metas {
        match m {
            MetaSlot::Formula(name) => {
                if s.formula(&name).is_none() {
                    let a = fresh.atom();
                    s.bind_formula(name, a);
                }
            }
            MetaSlot::Predicate(name) => {
                if s.predicate(&name).is_none() {
                    let p = fresh.predicate();
                    s.bind_predicate(name, p);
                }
            }
            MetaSlot::Constant(name) => {
                let key = Term::Meta(name);
                if s.term(&key).is_none() {
                    let c = fresh.constant();
                    s.bind_term(key, Term::Const(c));
                }
            }
        }
    }
}

/// A concrete instance of one rule application.
pub(crate) struct Instantiated {
    pub premises: Vec<Formula>,
    pub defaults: Vec<DefaultRule>,
    pub conclusion: Formula,
    /// Slot holding the threaded formula, if any.
    pub threaded: Option<usize>,
}

fn schema_slots(rule: &RuleSchema) -> Vec<(Vec<Formula>, Vec<DefaultRule>, Formula)> {
    match &rule.body {
        SchemaBody::Deductive(dirs) => dirs
            .iter()
            .map(|d| (d.premises.clone(), Vec::new(), d.conclusion.clone()))
            .collect(),
        SchemaBody::Default(p) => vec![(
            p.formula_slots().into_iter().cloned().collect(),
            p.defaults.clone(),
            p.conclusion.clone(),
        )],
    }
}

fn instantiate_with(
    premises: &[Formula],
    defaults: &[DefaultRule],
    conclusion: &Formula,
    mut s: Substitution,
    fresh: &mut Fresh,
) -> (Vec<Formula>, Vec<DefaultRule>, Formula) {
    let default_parts: Vec<Formula> = defaults.iter().flat_map(|d| d.parts().cloned()).collect();
    complete_fresh(
        premises.iter().chain(&default_parts).chain(std::iter::once(conclusion)),
        &mut s,
        fresh,
    );
    let ps = premises.iter().map(|p| apply_substitution(p, &s)).collect();
    let ds = defaults
        .iter()
        .map(|d| DefaultRule {
            prerequisite: apply_substitution(&d.prerequisite, &s),
            justifications: d.justifications.iter().map(|j| apply_substitution(j, &s)).collect(),
            consequent: apply_substitution(&d.consequent, &s),
            priority: d.priority,
        })
        .collect();
    (ps, ds, apply_substitution(conclusion, &s))
}

/// Instantiates `rule` with fresh symbols, threading `input` into the first
/// premise slot (over directions, then slots) that accepts it.
pub(crate) fn instantiate(
    rule: &RuleSchema,
    input: Option<&Formula>,
    fresh: &mut Fresh,
) -> Option<Instantiated> {
    for (premises, defaults, conclusion) in schema_slots(rule) {
        match input {
            None => {
                let (ps, ds, c) =
                    instantiate_with(&premises, &defaults, &conclusion, Substitution::new(), fresh);
                return Some(Instantiated {
                    premises: ps,
                    defaults: ds,
                    conclusion: c,
                    threaded: None,
                });
            }
            Some(input) => {
                for (slot, schema) in premises.iter().enumerate() {
                    if let Some(s) = match_schema(schema, input) {
                        let (ps, ds, c) = instantiate_with(&premises, &defaults, &conclusion, s, fresh);
                        return Some(Instantiated {
                            premises: ps,
                            defaults: ds,
                            conclusion: c,
                            threaded: Some(slot),
                        });
                    }
                }
            }
        }
    }
    None
}

/// Whether some premise slot of `rule` accepts `input`.
pub(crate) fn accepts(rule: &RuleSchema, input: &Formula) -> bool {
    schema_slots(rule)
        .iter()
        .any(|(premises, _, _)| premises.iter().any(|p| match_schema(p, input).is_some()))
}

/// A fresh instance of the slot a heuristic step should produce for
/// `rule`: its first atomic premise slot, or slot 0.
pub(crate) fn bridge_target(rule: &RuleSchema, fresh: &mut Fresh) -> Formula {
    let (premises, defaults, conclusion) = schema_slots(rule).remove(0);
    let slot = premises
        .iter()
        .position(|p| matches!(p, Formula::Meta(_) | Formula::Atom(..)))
        .unwrap_or(0);
    let (ps, _, _) = instantiate_with(&premises, &defaults, &conclusion, Substitution::new(), fresh);
    ps[slot].clone()
}

/// One application of a rule with every metavariable replaced by a fresh
/// symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    pub premises: Vec<Formula>,
    pub defaults: Vec<DefaultRule>,
    pub conclusion: Formula,
}

/// Fresh instances of every direction of `rule`. Propositional rules use
/// atoms `p<k>`; the others use predicates `P<k>` and constants `c<k>`.
pub fn fresh_instances(rule: &RuleSchema) -> Vec<RuleInstance> {
    schema_slots(rule)
        .into_iter()
        .map(|(premises, defaults, conclusion)| {
            let mut fresh = Fresh::for_class(rule.logic_class);
            let (premises, defaults, conclusion) =
                instantiate_with(&premises, &defaults, &conclusion, Substitution::new(), &mut fresh);
            RuleInstance {
                premises,
                defaults,
                conclusion,
            }
        })
        .collect()
}

/// Incrementally assembled chain.
#[derive(Clone)]
pub(crate) struct Builder {
    pub class: LogicClass,
    pub fresh: Fresh,
    pub steps: Vec<ChainStep>,
}

impl Builder {
    pub(crate) fn new(class: LogicClass) -> Self {
        Builder {
            class,
            fresh: Fresh::for_class(class),
            steps: Vec::new(),
        }
    }

    pub(crate) fn last_conclusion(&self) -> Option<&Formula> {
        self.steps.last().map(|s| &s.conclusion)
    }

    fn mentions(&self, f: &Formula) -> bool {
        self.steps
            .iter()
            .any(|s| &s.conclusion == f || s.premises.iter().any(|p| &p.formula == f))
    }

    /// Appends a symbolic step; false if the rule cannot consume the
    /// previous conclusion or would only restate a formula already in the
    /// chain.
    pub(crate) fn push_rule(&mut self, rule: &RuleSchema) -> bool {
        let input = self.last_conclusion().cloned();
        let Some(inst) = instantiate(rule, input.as_ref(), &mut self.fresh) else {
            return false;
        };
        if self.mentions(&inst.conclusion) || inst.premises.contains(&inst.conclusion) {
            return false;
        }
        let index = self.steps.len();
        let premises = inst
            .premises
            .into_iter()
            .enumerate()
            .map(|(slot, formula)| Premise {
                formula,
                provenance: if Some(slot) == inst.threaded {
                    Provenance::Derived(index - 1)
                } else {
                    Provenance::Context
                },
            })
            .collect();
        self.steps.push(ChainStep {
            index,
            rule_id: rule.id.to_string(),
            premises,
            defaults: inst.defaults,
            conclusion: inst.conclusion,
            step_type: StepType::Symbolic,
        });
        true
    }

    /// Appends a heuristic step bridging to an input `next` can consume.
    pub(crate) fn push_heuristic(&mut self, next: &RuleSchema) {
        let index = self.steps.len();
        let prev = self
            .last_conclusion()
            .cloned()
            .expect("heuristic steps follow a symbolic step");
        let target = bridge_target(next, &mut self.fresh);
        self.steps.push(ChainStep {
            index,
            rule_id: HEURISTIC.to_string(),
            premises: vec![Premise {
                formula: prev,
                provenance: Provenance::Derived(index - 1),
            }],
            defaults: Vec::new(),
            conclusion: target,
            step_type: StepType::Heuristic,
        });
    }

    pub(crate) fn finish(self) -> ReasoningChain {
        let mut root_premises = Vec::new();
        let mut root_defaults = Vec::new();
        for s in &self.steps {
            for p in &s.premises {
                if !matches!(p.provenance, Provenance::Derived(_)) && !root_premises.contains(&p.formula) {
                    root_premises.push(p.formula.clone());
                }
            }
            for d in &s.defaults {
                if !root_defaults.contains(d) {
                    root_defaults.push(d.clone());
                }
            }
        }
        let final_conclusion = self.steps.last().expect("non-empty chain").conclusion.clone();
        ReasoningChain {
            steps: self.steps,
            logic_type: self.class,
            root_premises,
            root_defaults,
            final_conclusion,
        }
    }
}

/// Class a rule sequence belongs to.
fn sequence_class(rules: &[&RuleSchema]) -> LogicClass {
    if rules.iter().any(|r| r.logic_class == LogicClass::NM) {
        LogicClass::NM
    } else if rules.iter().all(|r| r.family == Family::PL) {
        LogicClass::PL
    } else {
        LogicClass::FOL
    }
}

/// Builds the chain for an explicit rule sequence.
pub fn compose_chain<S: AsRef<str>>(rule_sequence: &[S]) -> Result<ReasoningChain, ChainError> {
    let n = rule_sequence.len();
    if !(MIN_DEPTH..=MAX_DEPTH).contains(&n) {
        return Err(ChainError::DepthOutOfRange(n));
    }
    let rules = rule_sequence
        .iter()
        .map(|id| {
            catalog()
                .get(id.as_ref())
                .ok_or_else(|| ChainError::UnknownRule(id.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut b = Builder::new(sequence_class(&rules));
    for (i, rule) in rules.iter().enumerate() {
        if !b.push_rule(rule) {
            return Err(ChainError::Incompatible {
                previous: rules[i - 1].id.to_string(),
                next: rule.id.to_string(),
            });
        }
    }
    Ok(b.finish())
}

impl fmt::Display for ReasoningChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            let premises: Vec<String> = s.premises.iter().map(|p| p.formula.to_string()).collect();
            write!(f, "{}. [{}] {}", s.index + 1, s.rule_id, premises.join("; "))?;
            for d in &s.defaults {
                write!(f, "; {d}")?;
            }
            writeln!(f, " => {}", s.conclusion)?;
        }
        Ok(())
    }
}

/// Symbols of each kind used by a chain, in first-use order.
pub fn chain_symbols(chain: &ReasoningChain) -> BTreeMap<&'static str, Vec<String>> {
    let mut props = Vec::new();
    let mut preds = Vec::new();
    let mut consts = Vec::new();
    let mut add = |f: &Formula| {
        f.visit(&mut |g| {
            if let Formula::Atom(Pred::Name(n), args) = g {
                let target = if args.is_empty() { &mut props } else { &mut preds };
                if !target.contains(n) {
                    target.push(n.clone());
                }
                for t in args {
                    if let Term::Const(c) = t {
                        if !consts.contains(c) {
                            consts.push(c.clone());
                        }
                    }
                }
            }
        })
    };
    for s in &chain.steps {
        for p in &s.premises {
            add(&p.formula);
        }
        for d in &s.defaults {
            for part in d.parts() {
                add(part);
            }
        }
        add(&s.conclusion);
    }
    BTreeMap::from([("proposition", props), ("predicate", preds), ("constant", consts)])
}
