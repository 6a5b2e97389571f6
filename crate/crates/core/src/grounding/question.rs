//! Question and answer construction over grounded instances.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GroundedInstance, GroundingError, Lexicon, SymbolMap};
use crate::chain::StepType;
use crate::formula::{Formula, Pred, Term};
use crate::oracle::{Oracle, TruthValue};
use crate::rules::LogicClass;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    TruthEval,
    MultipleChoice,
}

impl QuestionType {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::TruthEval => "truth_eval",
            QuestionType::MultipleChoice => "multiple_choice",
        }
    }
}

/// A gold or predicted answer: a truth label or an option index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Label(TruthValue),
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelRatios {
    #[serde(rename = "True")]
    pub true_: f64,
    #[serde(rename = "False")]
    pub false_: f64,
    #[serde(rename = "Unknown")]
    pub unknown: f64,
}

impl Default for LabelRatios {
    fn default() -> Self {
        LabelRatios {
            true_: 0.4,
            false_: 0.4,
            unknown: 0.2,
        }
    }
}

impl LabelRatios {
    pub fn get(&self, label: TruthValue) -> f64 {
        match label {
            TruthValue::True => self.true_,
            TruthValue::False => self.false_,
            TruthValue::Unknown => self.unknown,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> TruthValue {
        let total = self.true_ + self.false_ + self.unknown;
        let u = rng.gen::<f64>() * total;
        if u < self.true_ {
            TruthValue::True
        } else if u < self.true_ + self.false_ {
            TruthValue::False
        } else {
            TruthValue::Unknown
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuestionConfig {
    pub ratios: LabelRatios,
    /// Candidates tried per distractor before giving up.
    pub max_retries: usize,
}

impl Default for QuestionConfig {
    fn default() -> Self {
        QuestionConfig {
            ratios: LabelRatios::default(),
            max_retries: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub question_type: QuestionType,
    pub text: String,
    /// Four statements for multiple choice, empty otherwise.
    pub options: Vec<String>,
    pub answer: Answer,
    /// The statement under evaluation, for truth evaluation.
    pub hypothesis: Option<Formula>,
    pub option_formulas: Vec<Formula>,
    /// Phrases introduced for statements outside the chain.
    pub extra_symbols: SymbolMap,
}

const TRUTH_EVAL_PROMPT: &str =
    "Based on the image and the text, is the following statement true, false, or unknown?";
const MULTIPLE_CHOICE_PROMPT: &str =
    "Based on the image and the text, which one of the following statements can be concluded?";

/// Issues symbols and phrases the chain does not use.
struct FreshStatements<'a> {
    lexicon: &'a Lexicon,
    used: BTreeSet<String>,
    extra: SymbolMap,
    counter: usize,
}

impl<'a> FreshStatements<'a> {
    fn new(instance: &GroundedInstance, lexicon: &'a Lexicon) -> Self {
        let mut used: BTreeSet<String> = instance.symbols.propositions.values().cloned().collect();
        used.extend(instance.symbols.predicates.values().map(|t| t.template.clone()));
        FreshStatements {
            lexicon,
            used,
            extra: SymbolMap::default(),
            counter: 0,
        }
    }

    /// An unrelated statement about the instance's world.
    fn statement(&mut self, instance: &GroundedInstance, rng: &mut ChaCha8Rng) -> Result<Formula, GroundingError> {
        self.counter += 1;
        let constants: Vec<&String> = instance.symbols.constants.keys().collect();
        if instance.logic_type == LogicClass::PL || constants.is_empty() && instance.symbols.predicates.is_empty() {
            let pool: Vec<&String> = self
                .lexicon
                .entries
                .proposition
                .iter()
                .filter(|p| !self.used.contains(*p))
                .collect();
            let phrase = (*pool.choose(rng).ok_or_else(|| short("proposition"))?).clone();
            self.used.insert(phrase.clone());
            let name = format!("u{}", self.counter);
            self.extra.propositions.insert(name.clone(), phrase);
            return Ok(Formula::prop(name));
        }
        let pool: Vec<_> = self
            .lexicon
            .predicates_of_arity(1)
            .filter(|t| !self.used.contains(&t.template))
            .collect();
        let template = (*pool.choose(rng).ok_or_else(|| short("arity-1 predicate"))?).clone();
        self.used.insert(template.template.clone());
        let name = format!("U{}", self.counter);
        self.extra.predicates.insert(name.clone(), template);
        Ok(match constants.choose(rng) {
            Some(c) => Formula::pred(name, vec![Term::constant((*c).clone())]),
            None => Formula::exists("x", Formula::pred(name, vec![Term::var("x")])),
        })
    }
}

fn short(role: &str) -> GroundingError {
    GroundingError::Distractor(format!("lexicon has no spare {role} phrase"))
}

fn merged(a: &SymbolMap, b: &SymbolMap) -> SymbolMap {
    let mut out = a.clone();
    out.propositions.extend(b.propositions.clone());
    out.predicates.extend(b.predicates.clone());
    out.constants.extend(b.constants.clone());
    out
}

fn label_of(instance: &GroundedInstance, oracle: &Oracle, f: &Formula) -> Result<TruthValue, GroundingError> {
    Ok(oracle.truth_value(&instance.knowledge(), &instance.defaults, f)?)
}

/// A truth-evaluation question whose gold label is `label`.
pub fn truth_eval_question(
    instance: &GroundedInstance,
    lexicon: &Lexicon,
    label: TruthValue,
    seed: u64,
    config: &QuestionConfig,
    oracle: &Oracle,
) -> Result<Question, GroundingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fresh = FreshStatements::new(instance, lexicon);
    let goal = &instance.chain.final_conclusion;
    let hypothesis = match label {
        TruthValue::True => goal.clone(),
        TruthValue::False => goal.negated(),
        TruthValue::Unknown => {
            let mut found = None;
            for _ in 0..config.max_retries.max(1) {
                let f = fresh.statement(instance, &mut rng)?;
                if label_of(instance, oracle, &f)? == TruthValue::Unknown {
                    found = Some(f);
                    break;
                }
            }
            found.ok_or_else(|| GroundingError::Distractor("no undetermined statement found".into()))?
        }
    };
    let actual = label_of(instance, oracle, &hypothesis)?;
    if actual != label {
        return Err(GroundingError::Distractor(format!(
            "hypothesis labelled {actual} where {label} was intended"
        )));
    }
    let symbols = merged(&instance.symbols, &fresh.extra);
    Ok(Question {
        question_type: QuestionType::TruthEval,
        text: format!("{TRUTH_EVAL_PROMPT} {}", symbols.sentence(&hypothesis)),
        options: Vec::new(),
        answer: Answer::Label(label),
        hypothesis: Some(hypothesis),
        option_formulas: Vec::new(),
        extra_symbols: fresh.extra,
    })
}

/// `f` with every occurrence of one symbol replaced by another.
fn rename(f: &Formula, from: &Symbol, to: &Symbol) -> Formula {
    match f {
        Formula::Atom(p, args) => {
            let p = match (p, from, to) {
                (Pred::Name(n), Symbol::Prop(a), Symbol::Prop(b)) if args.is_empty() && n == a => Pred::Name(b.clone()),
                (Pred::Name(n), Symbol::Pred(a, _), Symbol::Pred(b, _)) if !args.is_empty() && n == a => {
                    Pred::Name(b.clone())
                }
                _ => p.clone(),
            };
            let args = args
                .iter()
                .map(|t| match (t, from, to) {
                    (Term::Const(c), Symbol::Const(a), Symbol::Const(b)) if c == a => Term::Const(b.clone()),
                    _ => t.clone(),
                })
                .collect();
            Formula::Atom(p, args)
        }
        Formula::Meta(_) => f.clone(),
        Formula::Not(a) => Formula::not(rename(a, from, to)),
        Formula::And(a, b) => Formula::and(rename(a, from, to), rename(b, from, to)),
        Formula::Or(a, b) => Formula::or(rename(a, from, to), rename(b, from, to)),
        Formula::Implies(a, b) => Formula::implies(rename(a, from, to), rename(b, from, to)),
        Formula::Iff(a, b) => Formula::iff(rename(a, from, to), rename(b, from, to)),
        Formula::ForAll(v, b) => Formula::forall(v.clone(), rename(b, from, to)),
        Formula::Exists(v, b) => Formula::exists(v.clone(), rename(b, from, to)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Symbol {
    Prop(String),
    Pred(String, usize),
    Const(String),
}

fn symbols_of(f: &Formula) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    f.visit(&mut |g| {
        if let Formula::Atom(Pred::Name(n), args) = g {
            if args.is_empty() {
                out.insert(Symbol::Prop(n.clone()));
            } else {
                out.insert(Symbol::Pred(n.clone(), args.len()));
            }
            for t in args {
                if let Term::Const(c) = t {
                    out.insert(Symbol::Const(c.clone()));
                }
            }
        }
    });
    out
}

fn same_kind(a: &Symbol, b: &Symbol) -> bool {
    match (a, b) {
        (Symbol::Prop(_), Symbol::Prop(_)) | (Symbol::Const(_), Symbol::Const(_)) => true,
        (Symbol::Pred(_, i), Symbol::Pred(_, j)) => i == j,
        _ => false,
    }
}

/// Subformulas of `f` that are atoms, with `f` rewritten so the atom at
/// that position is negated.
fn polarity_flips(f: &Formula) -> Vec<Formula> {
    fn go(f: &Formula, out: &mut Vec<Formula>, wrap: &dyn Fn(Formula) -> Formula) {
        match f {
            Formula::Atom(..) => out.push(wrap(Formula::not(f.clone()))),
            Formula::Not(a) if a.is_atom() => out.push(wrap((**a).clone())),
            Formula::Not(a) => go(a, out, &|x| wrap(Formula::not(x))),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                let rebuild = |l: Formula, r: Formula| match f {
                    Formula::And(..) => Formula::and(l, r),
                    Formula::Or(..) => Formula::or(l, r),
                    Formula::Implies(..) => Formula::implies(l, r),
                    _ => Formula::iff(l, r),
                };
                go(a, out, &|x| wrap(rebuild(x, (**b).clone())));
                go(b, out, &|x| wrap(rebuild((**a).clone(), x)));
            }
            Formula::ForAll(v, b) => go(b, out, &|x| wrap(Formula::forall(v.clone(), x))),
            Formula::Exists(v, b) => go(b, out, &|x| wrap(Formula::exists(v.clone(), x))),
            Formula::Meta(_) => {}
        }
    }
    let mut out = Vec::new();
    go(f, &mut out, &|x| x);
    out
}

/// A four-option question: the final conclusion plus three certified
/// non-entailed distractors.
pub fn multiple_choice_question(
    instance: &GroundedInstance,
    lexicon: &Lexicon,
    seed: u64,
    config: &QuestionConfig,
    oracle: &Oracle,
) -> Result<Question, GroundingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fresh = FreshStatements::new(instance, lexicon);
    let correct = instance.chain.final_conclusion.clone();
    if label_of(instance, oracle, &correct)? != TruthValue::True {
        return Err(GroundingError::NotEntailed);
    }
    let mut chosen: Vec<Formula> = vec![correct.clone()];
    let mut texts: BTreeSet<String> = BTreeSet::from([instance.symbols.sentence(&correct)]);

    let accept = |f: &Formula, chosen: &mut Vec<Formula>, texts: &mut BTreeSet<String>, extra: &SymbolMap| -> Result<bool, GroundingError> {
        if chosen.contains(f) {
            return Ok(false);
        }
        let text = merged(&instance.symbols, extra).sentence(f);
        if texts.contains(&text) || label_of(instance, oracle, f)? == TruthValue::True {
            return Ok(false);
        }
        texts.insert(text);
        chosen.push(f.clone());
        Ok(true)
    };

    // Negation of a derived step, symbolic steps first.
    let mut derived: Vec<&Formula> = Vec::new();
    let n = instance.chain.steps.len();
    for want in [StepType::Symbolic, StepType::Heuristic] {
        let mut group: Vec<&Formula> = instance.chain.steps[..n - 1]
            .iter()
            .filter(|s| s.step_type == want)
            .map(|s| &s.conclusion)
            .collect();
        group.shuffle(&mut rng);
        derived.extend(group);
    }
    derived.push(&correct);
    let mut ok = false;
    for f in derived.into_iter().take(config.max_retries.max(1)) {
        if accept(&f.negated(), &mut chosen, &mut texts, &fresh.extra)? {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(GroundingError::Distractor("no derived step has a usable negation".into()));
    }

    // The final rule's conclusion with one symbol rebound, then with one
    // atom's polarity flipped.
    let mut pool: BTreeSet<Symbol> = BTreeSet::new();
    for f in instance.knowledge().iter().chain(instance.chain.steps.iter().map(|s| &s.conclusion)) {
        pool.extend(symbols_of(f));
    }
    let mut swaps: Vec<Formula> = Vec::new();
    for from in symbols_of(&correct) {
        for to in pool.iter().filter(|to| **to != from && same_kind(&from, to)) {
            swaps.push(rename(&correct, &from, to));
        }
    }
    swaps.shuffle(&mut rng);
    let mut flips = polarity_flips(&correct);
    flips.shuffle(&mut rng);
    let mut ok = false;
    for f in swaps.iter().take(config.max_retries.max(1)).chain(flips.iter()) {
        if accept(f, &mut chosen, &mut texts, &fresh.extra)? {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(GroundingError::Distractor("no misapplication survived certification".into()));
    }

    // An unrelated statement from the lexicon.
    let mut ok = false;
    for _ in 0..config.max_retries.max(1) {
        let f = fresh.statement(instance, &mut rng)?;
        if accept(&f, &mut chosen, &mut texts, &fresh.extra)? {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(GroundingError::Distractor("no unrelated statement survived certification".into()));
    }

    let mut order: Vec<usize> = (0..4).collect();
    order.shuffle(&mut rng);
    let option_formulas: Vec<Formula> = order.iter().map(|&i| chosen[i].clone()).collect();
    let answer = order.iter().position(|&i| i == 0).expect("correct option present");
    let symbols = merged(&instance.symbols, &fresh.extra);
    let options = option_formulas.iter().map(|f| symbols.sentence(f)).collect();
    Ok(Question {
        question_type: QuestionType::MultipleChoice,
        text: MULTIPLE_CHOICE_PROMPT.to_string(),
        options,
        answer: Answer::Index(answer),
        hypothesis: None,
        option_formulas,
        extra_symbols: fresh.extra,
    })
}

/// A question of the requested type; truth-evaluation labels are drawn
/// from the configured ratios.
pub fn generate_question(
    instance: &GroundedInstance,
    lexicon: &Lexicon,
    question_type: QuestionType,
    seed: u64,
    config: &QuestionConfig,
    oracle: &Oracle,
) -> Result<Question, GroundingError> {
    match question_type {
        QuestionType::TruthEval => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1abe1);
            let label = config.ratios.sample(&mut rng);
            truth_eval_question(instance, lexicon, label, seed, config, oracle)
        }
        QuestionType::MultipleChoice => multiple_choice_question(instance, lexicon, seed, config, oracle),
    }
}
