//! Ground-truth decision procedures.
//!
//! Propositional entailment is decided by truth tables (small inputs) or by
//! exhaustive DPLL search over the same valuations (large inputs).
//! First-order entailment is decided relative to a bound on the domain
//! size. Default theories are decided by enumerating Reiter extensions over
//! the constants they mention.

mod defaults;
mod finite;
mod ground;
mod sat;
mod table;
mod verify;


use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{DefaultRule, Formula};

pub use defaults::{DefaultTheory, Extension};
pub use finite::Structure;
pub use table::eval_valuation;
pub use verify::{verify_chain, verify_chain_with, Overall, StepVerdict, VerificationReport};


/// Largest domain size the finite-model search accepts.
pub const MAX_DOMAIN_LIMIT: usize = 4;

/// Largest predicate arity the finite-model search accepts.
pub const MAX_ARITY: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Atom cap for the truth-table procedure.
    pub max_atoms: usize,
    /// Domain bound for first-order entailment.
    pub max_domain: usize,
    /// Branching decisions allowed per entailment query.
    pub search_budget: u64,
    /// Cap on ground default and formula instances in a default theory.
    pub max_ground_instances: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_atoms: 20,
            max_domain: 3,
            search_budget: 5_000_000,
            max_ground_instances: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Entailed,
    NotEntailed,
    Undetermined,
}

/// A model showing that the goal does not follow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Countermodel {
    /// Truth values of the atoms, keyed by concrete syntax.
    Valuation { values: BTreeMap<String, bool> },
    Structure(Structure),
    Extension(Extension),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntailmentVerdict {
    pub status: Status,
    pub counterexample: Option<Countermodel>,
    /// Domain bound the verdict holds up to, for first-order queries.
    pub domain_bound: Option<usize>,
}

impl EntailmentVerdict {
    pub(crate) fn entailed(bound: Option<usize>) -> Self {
        EntailmentVerdict {
            status: Status::Entailed,
            counterexample: None,
            domain_bound: bound,
        }
    }

    pub(crate) fn refuted(model: Countermodel, bound: Option<usize>) -> Self {
        EntailmentVerdict {
            status: Status::NotEntailed,
            counterexample: Some(model),
            domain_bound: bound,
        }
    }

    pub(crate) fn undetermined(bound: Option<usize>) -> Self {
        EntailmentVerdict {
            status: Status::Undetermined,
            counterexample: None,
            domain_bound: bound,
        }
    }

    pub fn is_entailed(&self) -> bool {
        self.status == Status::Entailed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TruthValue {
    True,
    False,
    Unknown,
}

impl TruthValue {
    pub fn as_str(self) -> &'static str {
        match self {
            TruthValue::True => "True",
            TruthValue::False => "False",
            TruthValue::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{atoms} atoms exceed the truth-table cap of {cap}")]
    AtomCap { atoms: usize, cap: usize },
    #[error("formula is not propositional: {0}")]
    NotPropositional(String),
    #[error("formula contains metavariables: {0}")]
    Metavariables(String),
    #[error("formula is not closed: {0}")]
    NotClosed(String),
    #[error("predicate {name} has arity {arity}, above the limit of {MAX_ARITY}")]
    ArityTooLarge { name: String, arity: usize },
    #[error("predicate {name} used with arities {first} and {second}")]
    ArityClash {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("domain bound {requested} exceeds the limit of {MAX_DOMAIN_LIMIT}")]
    DomainTooLarge { requested: usize },
    #[error("{instances} ground instances exceed the cap of {cap}")]
    GroundCap { instances: usize, cap: usize },
    #[error("search budget exhausted")]
    BudgetExhausted,
}

/// Entry point bundling the configured bounds.
#[derive(Clone, Debug, Default)]
pub struct Oracle {
    pub config: OracleConfig,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Self {
        Oracle { config }
    }

    /// Truth-table entailment for quantifier-free formulas.
    pub fn pl_entails(
        &self,
        premises: &[Formula],
        goal: &Formula,
    ) -> Result<EntailmentVerdict, OracleError> {
        table::truth_table_entails(premises, goal, self.config.max_atoms)
    }

    /// Exhaustive search over valuations without the atom cap.
    pub fn pl_entails_search(
        &self,
        premises: &[Formula],
        goal: &Formula,
    ) -> Result<EntailmentVerdict, OracleError> {
        table::search_entails(premises, goal, self.config.search_budget)
    }

    /// Entailment over all structures with 1 to `max_domain` elements.
    pub fn fol_entails_finite(
        &self,
        premises: &[Formula],
        goal: &Formula,
        max_domain: usize,
    ) -> Result<EntailmentVerdict, OracleError> {
        finite::entails(premises, goal, max_domain, self.config.search_budget)
    }

    /// A model of all formulas within the domain bound, if any.
    pub fn find_model(
        &self,
        formulas: &[Formula],
        max_domain: usize,
    ) -> Result<Option<Structure>, OracleError> {
        finite::find_model(formulas, max_domain, self.config.search_budget)
    }

    pub fn default_extensions(
        &self,
        theory: &DefaultTheory,
        constants: &[String],
    ) -> Result<Vec<Extension>, OracleError> {
        defaults::extensions(theory, constants, &self.config)
    }

    /// Skeptical entailment: the goal holds in every extension.
    pub fn default_entails(
        &self,
        theory: &DefaultTheory,
        constants: &[String],
        goal: &Formula,
    ) -> Result<EntailmentVerdict, OracleError> {
        defaults::skeptical(theory, constants, goal, &self.config)
    }

    /// Class-appropriate entailment of `goal` from formulas and defaults.
    pub fn entails(
        &self,
        formulas: &[Formula],
        defaults: &[DefaultRule],
        goal: &Formula,
    ) -> Result<EntailmentVerdict, OracleError> {
        if !defaults.is_empty() {
            let theory = DefaultTheory::split(formulas, defaults);
            let constants = theory_constants(formulas, defaults, Some(goal));
            return self.default_entails(&theory, &constants, goal);
        }
        if formulas.iter().all(Formula::is_quantifier_free) && goal.is_quantifier_free() {
            return self.pl_entails_search(formulas, goal);
        }
        self.fol_entails_finite(formulas, goal, self.config.max_domain)
    }

    /// True if entailed, False if the negation is, Unknown otherwise.
    pub fn truth_value(
        &self,
        formulas: &[Formula],
        defaults: &[DefaultRule],
        goal: &Formula,
    ) -> Result<TruthValue, OracleError> {
        let pos = self.entails(formulas, defaults, goal)?;
        match pos.status {
            Status::Entailed => return Ok(TruthValue::True),
            Status::Undetermined => return Err(OracleError::BudgetExhausted),
            Status::NotEntailed => {}
        }
        let neg = self.entails(formulas, defaults, &goal.negated())?;
        match neg.status {
            Status::Entailed => Ok(TruthValue::False),
            Status::Undetermined => Err(OracleError::BudgetExhausted),
            Status::NotEntailed => Ok(TruthValue::Unknown),
        }
    }

    /// Whether the knowledge has a model (or, with defaults, a consistent
    /// extension).
    pub fn consistent(
        &self,
        formulas: &[Formula],
        defaults: &[DefaultRule],
    ) -> Result<bool, OracleError> {
        let falsum = Formula::and(Formula::prop("falsum"), Formula::not(Formula::prop("falsum")));
        let v = self.entails(formulas, defaults, &falsum)?;
        match v.status {
            Status::Entailed => Ok(false),
            Status::NotEntailed => Ok(true),
            Status::Undetermined => Err(OracleError::BudgetExhausted),
        }
    }
}

/// Sorted constants of a knowledge base and optional goal.
pub fn theory_constants(
    formulas: &[Formula],
    defaults: &[DefaultRule],
    goal: Option<&Formula>,
) -> Vec<String> {
    let mut out: BTreeSet<String> = formulas.iter().flat_map(|f| f.constants()).collect();
    out.extend(defaults.iter().flat_map(|d| d.constants()));
    if let Some(g) = goal {
        out.extend(g.constants());
    }
    out.into_iter().collect()
}

/// Shared input validation for closed, metavariable-free formulas.
pub(crate) fn check_closed(formulas: &[&Formula]) -> Result<BTreeMap<String, usize>, OracleError> {
    for f in formulas {
        if f.has_metas() {
            return Err(OracleError::Metavariables(f.to_string()));
        }
        if !f.is_closed() {
            return Err(OracleError::NotClosed(f.to_string()));
        }
    }
    let sig = crate::formula::signature(formulas.iter().copied()).map_err(
        |(name, first, second)| OracleError::ArityClash {
            name,
            first,
            second,
        },
    )?;
    Ok(sig)
}
