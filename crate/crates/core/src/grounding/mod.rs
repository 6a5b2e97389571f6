//! Turning abstract chains into natural-language benchmark instances.

mod lexicon;
mod nl;
mod question;
mod record;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{chain_symbols, Provenance, ReasoningChain, StepType};
use crate::formula::{DefaultRule, Formula};
use crate::oracle::{Oracle, OracleError, TruthValue};
use crate::rules::LogicClass;

pub use lexicon::{load_lexicon, Domain, Entries, Lexicon, LexiconError, PredicateTemplate};
pub use nl::{sentence, SymbolMap};
pub use question::{
    generate_question, multiple_choice_question, truth_eval_question, Answer, LabelRatios, Question, QuestionConfig,
    QuestionType,
};
pub use record::{ChainRecord, FormalRecord, InstanceRecord, RecordError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundingConfig {
    pub min_context_chars: usize,
    pub max_context_chars: usize,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            min_context_chars: 35,
            max_context_chars: 1484,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum GroundingError {
    #[error("lexicon has {available} distinct {role} phrase(s) but the instance needs {needed}")]
    InsufficientPhrases {
        role: String,
        needed: usize,
        available: usize,
    },
    #[error("no root premise can be moved to the image without breaking the instance")]
    NoImagePremise,
    #[error("the knowledge does not entail the final conclusion")]
    NotEntailed,
    #[error("context has {len} characters, outside {min}..={max}")]
    ContextLength { len: usize, min: usize, max: usize },
    #[error("distractor certification failed: {0}")]
    Distractor(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Natural-language rendering of one chain step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepText {
    pub premises_nl: Vec<String>,
    pub conclusion_nl: String,
}

impl StepText {
    /// The step as one sentence, for plausibility scoring.
    pub fn full_text(&self) -> String {
        let premises: Vec<&str> = self
            .premises_nl
            .iter()
            .map(|p| p.trim_end_matches('.'))
            .collect();
        format!("{}. Therefore, {}", premises.join(". "), lower_first(&self.conclusion_nl))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundedInstance {
    pub id: String,
    pub domain: Domain,
    pub logic_type: LogicClass,
    pub depth: usize,
    pub image_ref: String,
    pub visual_details: Vec<String>,
    pub context: String,
    pub chain: ReasoningChain,
    pub steps_nl: Vec<StepText>,
    pub gold_answer: TruthValue,
    pub symbols: SymbolMap,
    pub context_formal: Vec<Formula>,
    pub visual_formal: Vec<Formula>,
    pub defaults: Vec<DefaultRule>,
    pub bridges: Vec<Formula>,
}

impl GroundedInstance {
    /// Everything a reader is given: text, image and commonsense bridges.
    pub fn knowledge(&self) -> Vec<Formula> {
        self.context_formal
            .iter()
            .chain(&self.visual_formal)
            .chain(&self.bridges)
            .cloned()
            .collect()
    }

    /// The knowledge without the image-borne premises.
    pub fn text_only_knowledge(&self) -> Vec<Formula> {
        self.context_formal.iter().chain(&self.bridges).cloned().collect()
    }
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() && !chars.clone().next().is_some_and(char::is_uppercase) => {
            c.to_lowercase().collect::<String>() + chars.as_str()
        }
        Some(c) => c.to_string() + chars.as_str(),
        None => String::new(),
    }
}

/// Assigns distinct phrases to every symbol of `chain`.
fn assign(chain: &ReasoningChain, lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> Result<SymbolMap, GroundingError> {
    let symbols = chain_symbols(chain);
    let mut map = SymbolMap::default();

    let needed = &symbols["proposition"];
    let mut pool: Vec<&String> = lexicon.entries.proposition.iter().collect();
    if needed.len() > pool.len() {
        return Err(GroundingError::InsufficientPhrases {
            role: "proposition".into(),
            needed: needed.len(),
            available: pool.len(),
        });
    }
    pool.shuffle(rng);
    for (sym, phrase) in needed.iter().zip(pool) {
        map.propositions.insert(sym.clone(), phrase.clone());
    }

    let needed = &symbols["constant"];
    let mut pool: Vec<&String> = lexicon.entries.constant.iter().collect();
    if needed.len() > pool.len() {
        return Err(GroundingError::InsufficientPhrases {
            role: "constant".into(),
            needed: needed.len(),
            available: pool.len(),
        });
    }
    pool.shuffle(rng);
    for (sym, phrase) in needed.iter().zip(pool) {
        map.constants.insert(sym.clone(), phrase.clone());
    }

    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    for f in chain_formulas(chain) {
        arities.extend(f.predicates());
    }
    let mut by_arity: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
    for p in &symbols["predicate"] {
        by_arity.entry(arities[p]).or_default().push(p);
    }
    for (arity, syms) in by_arity {
        let mut pool: Vec<&PredicateTemplate> = lexicon.predicates_of_arity(arity).collect();
        if syms.len() > pool.len() {
            return Err(GroundingError::InsufficientPhrases {
                role: format!("arity-{arity} predicate"),
                needed: syms.len(),
                available: pool.len(),
            });
        }
        pool.shuffle(rng);
        for (sym, t) in syms.into_iter().zip(pool) {
            map.predicates.insert(sym.clone(), t.clone());
        }
    }
    Ok(map)
}

fn chain_formulas(chain: &ReasoningChain) -> Vec<&Formula> {
    let mut out = Vec::new();
    for s in &chain.steps {
        out.extend(s.premises.iter().map(|p| &p.formula));
        for d in &s.defaults {
            out.extend(d.parts());
        }
        out.push(&s.conclusion);
    }
    out
}

fn show_priorities(defaults: &[DefaultRule]) -> bool {
    defaults.iter().map(|d| d.priority).collect::<BTreeSet<_>>().len() > 1
}

/// Renders every step: symbolic steps verbatim, heuristic ones through a
/// bridge template.
fn render_steps(
    chain: &ReasoningChain,
    map: &SymbolMap,
    lexicon: &Lexicon,
    rng: &mut ChaCha8Rng,
) -> Vec<StepText> {
    let prio = show_priorities(&chain.root_defaults);
    chain
        .steps
        .iter()
        .map(|s| {
            let mut premises_nl: Vec<String> =
                s.premises.iter().map(|p| map.sentence(&p.formula)).collect();
            premises_nl.extend(s.defaults.iter().map(|d| map.default_sentence(d, prio)));
            let conclusion_nl = match s.step_type {
                StepType::Symbolic => map.sentence(&s.conclusion),
                StepType::Heuristic => {
                    let template = lexicon.bridges.choose(rng).expect("validated non-empty");
                    let premise: Vec<String> = s.premises.iter().map(|p| map.clause(&p.formula)).collect();
                    sentence(
                        &template
                            .replace("{premise}", &premise.join(" and "))
                            .replace("{conclusion}", &map.clause(&s.conclusion)),
                    )
                }
            };
            StepText {
                premises_nl,
                conclusion_nl,
            }
        })
        .collect()
}

/// Root premises in the order the image should be tried: literals first,
/// each group in seeded order.
fn image_candidates(chain: &ReasoningChain, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut literals: Vec<usize> = Vec::new();
    let mut others: Vec<usize> = Vec::new();
    for (i, f) in chain.root_premises.iter().enumerate() {
        if f.is_literal() {
            literals.push(i);
        } else {
            others.push(i);
        }
    }
    literals.shuffle(rng);
    others.shuffle(rng);
    literals.extend(others);
    literals
}

pub fn ground_chain(chain: &ReasoningChain, lexicon: &Lexicon, seed: u64) -> Result<GroundedInstance, GroundingError> {
    ground_chain_with(chain, lexicon, seed, &GroundingConfig::default(), &Oracle::default())
}

/// Grounds `chain` in `lexicon`, hides one root premise in the image and
/// checks that text and image are needed together.
pub fn ground_chain_with(
    chain: &ReasoningChain,
    lexicon: &Lexicon,
    seed: u64,
    config: &GroundingConfig,
    oracle: &Oracle,
) -> Result<GroundedInstance, GroundingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = assign(chain, lexicon, &mut rng)?;
    let steps_nl = render_steps(chain, &symbols, lexicon, &mut rng);
    let bridges = chain.bridges();
    let defaults = chain.root_defaults.clone();
    let goal = &chain.final_conclusion;

    let full: Vec<Formula> = chain.root_premises.iter().chain(&bridges).cloned().collect();
    if oracle.truth_value(&full, &defaults, goal)? != TruthValue::True {
        return Err(GroundingError::NotEntailed);
    }

    let mut image = None;
    for i in image_candidates(chain, &mut rng) {
        let text_only: Vec<Formula> = chain
            .root_premises
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, f)| f.clone())
            .chain(bridges.iter().cloned())
            .collect();
        if oracle.truth_value(&text_only, &defaults, goal)? == TruthValue::Unknown {
            image = Some(i);
            break;
        }
    }
    let image = image.ok_or(GroundingError::NoImagePremise)?;
    let visual_formal = vec![chain.root_premises[image].clone()];
    let context_formal: Vec<Formula> = chain
        .root_premises
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != image)
        .map(|(_, f)| f.clone())
        .collect();

    let prio = show_priorities(&defaults);
    let mut sentences: Vec<String> = context_formal.iter().map(|f| symbols.sentence(f)).collect();
    sentences.extend(defaults.iter().map(|d| symbols.default_sentence(d, prio)));
    sentences.shuffle(&mut rng);
    if prio {
        sentences.push("When defaults conflict, the one with the lower priority number wins.".into());
    }
    let context = sentences.join(" ");
    let len = context.chars().count();
    if len < config.min_context_chars || len > config.max_context_chars {
        return Err(GroundingError::ContextLength {
            len,
            min: config.min_context_chars,
            max: config.max_context_chars,
        });
    }

    let visual_details = visual_formal
        .iter()
        .map(|f| {
            let template = lexicon.visual_details.choose(&mut rng).expect("validated non-empty");
            sentence(&template.replace("{fact}", &symbols.clause(f)))
        })
        .collect();

    let mut chain = chain.clone();
    for f in &visual_formal {
        chain.set_provenance(f, Provenance::Image);
    }
    for f in &context_formal {
        chain.set_provenance(f, Provenance::Context);
    }
    let image_ref = if lexicon.images.is_empty() {
        format!("image://{}/{seed:016x}", lexicon.domain)
    } else {
        lexicon.images[(seed % lexicon.images.len() as u64) as usize].clone()
    };

    Ok(GroundedInstance {
        id: format!("{}-{}-d{}-{seed:016x}", lexicon.domain, chain.logic_type, chain.depth()),
        domain: lexicon.domain,
        logic_type: chain.logic_type,
        depth: chain.depth(),
        image_ref,
        visual_details,
        context,
        chain,
        steps_nl,
        gold_answer: TruthValue::True,
        symbols,
        context_formal,
        visual_formal,
        defaults,
        bridges,
    })
}
