//! Bounded forward search for a derivation of one of the target formulas.

use std::collections::{BTreeSet, HashMap};

use crate::formula::{DefaultRule, Formula};
use crate::rules::{catalog, rule_hits_since, LogicClass, RuleHit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanConfig {
    /// Saturation rounds.
    pub max_levels: usize,
    /// Formulas held before the search gives up.
    pub max_formulas: usize,
    /// Growth allowed over the largest formula in the problem.
    pub size_slack: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            max_levels: 12,
            max_formulas: 6000,
            size_slack: 2,
        }
    }
}

/// Rule applications, in order, that derive a target from `known`. Hit
/// premises index `known` followed by the earlier planned conclusions.
///
/// Each round adds every novel conclusion of a hit that uses something
/// the previous round added, in catalog order, so the first target found
/// sits at the lowest round.
pub fn plan(
    known: &[Formula],
    defaults: &[DefaultRule],
    classes: &BTreeSet<LogicClass>,
    targets: &[Formula],
    config: &PlanConfig,
) -> Option<Vec<RuleHit>> {
    // Rules only recombine symbols already present, so targets with other
    // symbols are out of reach.
    let mut symbols: BTreeSet<String> = known.iter().flat_map(|f| f.predicates().into_keys()).collect();
    symbols.extend(defaults.iter().flat_map(|d| d.predicates().into_keys()));
    let targets: Vec<Formula> = targets
        .iter()
        .filter(|t| t.predicates().keys().all(|p| symbols.contains(p)))
        .cloned()
        .collect();
    if targets.is_empty() {
        return None;
    }
    let bound = known.iter().chain(&targets).map(Formula::size).max().unwrap_or(0) + config.size_slack;
    let mut pool: Vec<Formula> = known.to_vec();
    let mut index: HashMap<Formula, usize> = pool.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
    let mut origin: Vec<Option<RuleHit>> = vec![None; pool.len()];
    let mut found = None;
    let mut since = 0;
    'levels: for _ in 0..config.max_levels {
        let before = pool.len();
        let snapshot = pool.clone();
        let rules = catalog().iter().filter(|r| classes.contains(&r.logic_class));
        for hit in rules.flat_map(|r| rule_hits_since(r, &snapshot, defaults, since)) {
            if index.contains_key(&hit.conclusion) || hit.conclusion.size() > bound {
                continue;
            }
            let i = pool.len();
            index.insert(hit.conclusion.clone(), i);
            pool.push(hit.conclusion.clone());
            let is_target = targets.contains(&hit.conclusion);
            origin.push(Some(hit));
            if is_target {
                found = Some(i);
                break 'levels;
            }
            if pool.len() >= config.max_formulas {
                break 'levels;
            }
        }
        if pool.len() == before {
            break;
        }
        since = before;
    }
    let target = found?;

    let mut needed = BTreeSet::new();
    let mut stack = vec![target];
    while let Some(i) = stack.pop() {
        if let Some(hit) = &origin[i] {
            if needed.insert(i) {
                stack.extend(hit.premises.iter().copied());
            }
        }
    }
    // Renumber premises so each hit indexes the state it will run in.
    let mut position: HashMap<usize, usize> = (0..known.len()).map(|i| (i, i)).collect();
    let mut steps = Vec::with_capacity(needed.len());
    for i in needed {
        let mut hit = origin[i].clone().expect("derived");
        hit.premises = hit.premises.iter().map(|p| position[p]).collect();
        position.insert(i, known.len() + steps.len());
        steps.push(hit);
    }
    Some(steps)
}
