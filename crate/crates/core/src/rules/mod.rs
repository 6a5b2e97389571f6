//! The built-in catalog of atomic inference schemas and their application
//! to concrete premises.

mod catalog;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::formula::{
    apply_substitution, match_default, match_schema_with, DefaultRule, Formula, Substitution,
    Term,
};

pub use catalog::RULE_ORDER;

/// Which oracle decides a rule's soundness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicClass {
    PL,
    FOL,
    NM,
}

impl LogicClass {
    pub const ALL: [LogicClass; 3] = [LogicClass::PL, LogicClass::FOL, LogicClass::NM];

    pub fn as_str(self) -> &'static str {
        match self {
            LogicClass::PL => "PL",
            LogicClass::FOL => "FOL",
            LogicClass::NM => "NM",
        }
    }
}

impl fmt::Display for LogicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LogicClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PL" => Ok(LogicClass::PL),
            "FOL" => Ok(LogicClass::FOL),
            "NM" => Ok(LogicClass::NM),
            _ => Err(format!("unknown logic class {s:?}")),
        }
    }
}

/// Catalog grouping. Multi-variable rules are first-order but listed apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    PL,
    FOL,
    MV,
    NM,
}

/// One direction of a deductive schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Direction {
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

/// A default theory template with its intended skeptical conclusion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefaultPattern {
    pub facts: Vec<Formula>,
    pub hard_rules: Vec<Formula>,
    pub defaults: Vec<DefaultRule>,
    pub conclusion: Formula,
}

impl DefaultPattern {
    /// Formula slots in matching order: facts then hard rules.
    pub fn formula_slots(&self) -> Vec<&Formula> {
        self.facts.iter().chain(&self.hard_rules).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemaBody {
    Deductive(Vec<Direction>),
    Default(DefaultPattern),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSchema {
    pub id: &'static str,
    pub name: &'static str,
    pub family: Family,
    pub logic_class: LogicClass,
    pub bidirectional: bool,
    pub body: SchemaBody,
}

impl RuleSchema {
    pub fn directions(&self) -> &[Direction] {
        match &self.body {
            SchemaBody::Deductive(d) => d,
            SchemaBody::Default(_) => &[],
        }
    }

    pub fn default_pattern(&self) -> Option<&DefaultPattern> {
        match &self.body {
            SchemaBody::Default(p) => Some(p),
            SchemaBody::Deductive(_) => None,
        }
    }

    /// Premise formulas of the forward direction (facts and hard rules for
    /// default patterns).
    pub fn premise_schemas(&self) -> Vec<Formula> {
        match &self.body {
            SchemaBody::Deductive(d) => d[0].premises.clone(),
            SchemaBody::Default(p) => p.formula_slots().into_iter().cloned().collect(),
        }
    }

    pub fn conclusion_schema(&self) -> &Formula {
        match &self.body {
            SchemaBody::Deductive(d) => &d[0].conclusion,
            SchemaBody::Default(p) => &p.conclusion,
        }
    }

    /// Default templates of an NM pattern; empty for deductive rules.
    pub fn default_schemas(&self) -> &[DefaultRule] {
        match &self.body {
            SchemaBody::Default(p) => &p.defaults,
            SchemaBody::Deductive(_) => &[],
        }
    }

    /// Largest number of formula premises over all directions.
    pub fn arity(&self) -> usize {
        match &self.body {
            SchemaBody::Deductive(d) => d.iter().map(|d| d.premises.len()).max().unwrap_or(0),
            SchemaBody::Default(p) => p.facts.len() + p.hard_rules.len(),
        }
    }
}

#[derive(Debug)]
pub struct RuleCatalog {
    rules: Vec<RuleSchema>,
}

impl RuleCatalog {
    pub fn get(&self, id: &str) -> Option<&RuleSchema> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RuleSchema> {
        self.rules.iter()
    }

    pub fn by_class(&self, class: LogicClass) -> impl Iterator<Item = &RuleSchema> {
        self.rules.iter().filter(move |r| r.logic_class == class)
    }

    pub fn by_family(&self, family: Family) -> impl Iterator<Item = &RuleSchema> {
        self.rules.iter().filter(move |r| r.family == family)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// The built-in catalog, built once.
pub fn catalog() -> &'static RuleCatalog {
    static CATALOG: OnceLock<RuleCatalog> = OnceLock::new();
    CATALOG.get_or_init(|| RuleCatalog {
        rules: catalog::build(),
    })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("unknown rule id {0:?}")]
    UnknownRule(String),
}

/// A rule that fires on a tuple of premises.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleHit {
    pub rule_id: &'static str,
    /// Indices into the formula list, in schema slot order.
    pub premises: Vec<usize>,
    /// Indices into the default list, in schema slot order (NM only).
    pub defaults: Vec<usize>,
    pub conclusion: Formula,
}

/// Every conclusion of `rule_id` over the given premises, deduplicated, in
/// order of first derivation.
pub fn apply_rule(rule_id: &str, premises: &[Formula]) -> Result<Vec<Formula>, RuleError> {
    apply_rule_with_defaults(rule_id, premises, &[])
}

/// Like [`apply_rule`], with the default rules an NM pattern needs.
pub fn apply_rule_with_defaults(
    rule_id: &str,
    premises: &[Formula],
    defaults: &[DefaultRule],
) -> Result<Vec<Formula>, RuleError> {
    let rule = catalog()
        .get(rule_id)
        .ok_or_else(|| RuleError::UnknownRule(rule_id.to_string()))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for hit in rule_hits(rule, premises, defaults, 0) {
        if seen.insert(hit.conclusion.clone()) {
            out.push(hit.conclusion);
        }
    }
    Ok(out)
}

/// All (rule, premise tuple, conclusion) triples over distinct premises,
/// ordered by catalog position then tuple.
pub fn applicable_rules(premises: &[Formula], classes: &BTreeSet<LogicClass>) -> Vec<RuleHit> {
    applicable_rules_with_defaults(premises, &[], classes)
}

pub fn applicable_rules_with_defaults(
    premises: &[Formula],
    defaults: &[DefaultRule],
    classes: &BTreeSet<LogicClass>,
) -> Vec<RuleHit> {
    applicable_rules_since(premises, defaults, classes, 0)
}

/// Like [`applicable_rules_with_defaults`], keeping only hits that use a
/// premise at index `since` or later.
pub fn applicable_rules_since(
    premises: &[Formula],
    defaults: &[DefaultRule],
    classes: &BTreeSet<LogicClass>,
    since: usize,
) -> Vec<RuleHit> {
    catalog()
        .iter()
        .filter(|r| classes.contains(&r.logic_class))
        .flat_map(|r| rule_hits_since(r, premises, defaults, since))
        .collect()
}

/// Hits of one rule that use a premise at index `since` or later, in
/// premise-index order without repeats.
pub fn rule_hits_since(
    rule: &RuleSchema,
    premises: &[Formula],
    defaults: &[DefaultRule],
    since: usize,
) -> Vec<RuleHit> {
    let mut hits = rule_hits(rule, premises, defaults, since);
    hits.sort_by(|a, b| (&a.premises, &a.defaults).cmp(&(&b.premises, &b.defaults)));
    let mut seen = HashSet::new();
    hits.retain(|h| seen.insert((h.premises.clone(), h.defaults.clone(), h.conclusion.clone())));
    hits
}

/// Whether `conclusion` follows from exactly these premises (in any slot
/// order) by one direction of `rule`.
pub fn matches_step(
    rule: &RuleSchema,
    premises: &[Formula],
    defaults: &[DefaultRule],
    conclusion: &Formula,
) -> bool {
    match &rule.body {
        SchemaBody::Deductive(dirs) => dirs.iter().any(|d| {
            d.premises.len() == premises.len()
                && defaults.is_empty()
                && permutations(premises.len(), d.premises.len())
                    .into_iter()
                    .any(|perm| {
                        let mut s = Some(Substitution::new());
                        for (schema, &i) in d.premises.iter().zip(&perm) {
                            s = s.and_then(|s| match_schema_with(schema, &premises[i], &s));
                        }
                        s.and_then(|s| match_schema_with(&d.conclusion, conclusion, &s))
                            .is_some()
                    })
        }),
        SchemaBody::Default(p) => {
            let slots = p.formula_slots();
            slots.len() == premises.len()
                && p.defaults.len() == defaults.len()
                && default_matches(p, premises, defaults, &all_indices(premises.len()), &all_indices(defaults.len()))
                    .into_iter()
                    .any(|(s, _, _)| {
                        match_schema_with(&p.conclusion, conclusion, &s)
                            .is_some_and(|s| injective(&s))
                    })
        }
    }
}

fn all_indices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Ordered selections of `k` distinct indices out of `n`.
fn permutations(n: usize, k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    if k > n {
        return Vec::new();
    }
    (0..n).permutations(k).collect()
}

fn rule_hits(
    rule: &RuleSchema,
    premises: &[Formula],
    defaults: &[DefaultRule],
    since: usize,
) -> Vec<RuleHit> {
    let mut out = Vec::new();
    match &rule.body {
        SchemaBody::Deductive(dirs) => {
            let constants: BTreeSet<String> = premises.iter().flat_map(|p| p.constants()).collect();
            for d in dirs {
                let mut partial = Vec::new();
                match_slots(&d.premises, premises, since, &mut partial);
                for (s, tuple) in partial {
                    for c in complete_conclusion(&d.conclusion, &s, &constants) {
                        out.push(RuleHit {
                            rule_id: rule.id,
                            premises: tuple.clone(),
                            defaults: Vec::new(),
                            conclusion: c,
                        });
                    }
                }
            }
        }
        SchemaBody::Default(p) => {
            let slots = p.formula_slots();
            if slots.len() > premises.len() || p.defaults.len() > defaults.len() {
                return out;
            }
            for (s, ft, dt) in default_matches(p, premises, defaults, &all_indices(premises.len()), &all_indices(defaults.len())) {
                let conclusion = apply_substitution(&p.conclusion, &s);
                if conclusion.has_metas() || (since > 0 && ft.iter().all(|&i| i < since)) {
                    continue;
                }
                out.push(RuleHit {
                    rule_id: rule.id,
                    premises: ft,
                    defaults: dt,
                    conclusion,
                });
            }
        }
    }
    out
}

/// Top-level connective tag.
fn kind(f: &Formula) -> u8 {
    match f {
        Formula::Atom(..) => 0,
        Formula::Meta(_) => 1,
        Formula::Not(_) => 2,
        Formula::And(..) => 3,
        Formula::Or(..) => 4,
        Formula::Implies(..) => 5,
        Formula::Iff(..) => 6,
        Formula::ForAll(..) => 7,
        Formula::Exists(..) => 8,
    }
}

fn children(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => Some((a, b)),
        _ => None,
    }
}

fn ground(f: &Formula) -> bool {
    !f.has_metas() && f.is_quantifier_free()
}

/// Premises indexed by exact form, by connective, and by connective with
/// either immediate subformula, so partially bound schemas skip most of
/// the pool.
struct Pool<'a> {
    premises: &'a [Formula],
    exact: HashMap<&'a Formula, Vec<usize>>,
    by_kind: HashMap<u8, Vec<usize>>,
    by_left: HashMap<u8, HashMap<&'a Formula, Vec<usize>>>,
    by_right: HashMap<u8, HashMap<&'a Formula, Vec<usize>>>,
}

impl<'a> Pool<'a> {
    fn new(premises: &'a [Formula]) -> Self {
        let mut pool = Pool {
            premises,
            exact: HashMap::new(),
            by_kind: HashMap::new(),
            by_left: HashMap::new(),
            by_right: HashMap::new(),
        };
        for (i, p) in premises.iter().enumerate() {
            pool.exact.entry(p).or_default().push(i);
            pool.by_kind.entry(kind(p)).or_default().push(i);
            if let Some((a, b)) = children(p) {
                pool.by_left.entry(kind(p)).or_default().entry(a).or_default().push(i);
                pool.by_right.entry(kind(p)).or_default().entry(b).or_default().push(i);
            }
        }
        pool
    }

    /// Premises that can match `schema`, a superset of the true matches.
    fn candidates(&self, schema: &Formula) -> Option<&[usize]> {
        let none: &[usize] = &[];
        if ground(schema) {
            return Some(self.exact.get(schema).map_or(none, Vec::as_slice));
        }
        let k = kind(schema);
        if k == 1 {
            return None;
        }
        if let Some((a, b)) = children(schema) {
            let side = if ground(a) {
                Some((&self.by_left, a))
            } else if ground(b) {
                Some((&self.by_right, b))
            } else {
                None
            };
            if let Some((index, child)) = side {
                return Some(index.get(&k).and_then(|m| m.get(child)).map_or(none, Vec::as_slice));
            }
        }
        Some(self.by_kind.get(&k).map_or(none, Vec::as_slice))
    }
}

/// Backtracking match of premise schemas against distinct premises, with
/// at least one premise at index `since` or later.
///
/// Each slot in turn takes the role of the first slot holding a new
/// premise and is matched first; earlier slots are limited to old
/// premises so every tuple is produced once.
fn match_slots(
    schemas: &[Formula],
    premises: &[Formula],
    since: usize,
    out: &mut Vec<(Substitution, Vec<usize>)>,
) {
    let pool = Pool::new(premises);
    let n = premises.len();
    if schemas.is_empty() {
        if since == 0 {
            out.push((Substitution::new(), Vec::new()));
        }
        return;
    }
    for first_new in 0..schemas.len() {
        if since == 0 && first_new > 0 {
            break;
        }
        let mut order = vec![first_new];
        order.extend((0..schemas.len()).filter(|&j| j != first_new));
        let ranges: Vec<(usize, usize)> = (0..schemas.len())
            .map(|j| match j.cmp(&first_new) {
                std::cmp::Ordering::Less => (0, since),
                std::cmp::Ordering::Equal => (since, n),
                std::cmp::Ordering::Greater => (0, n),
            })
            .collect();
        let mut used = vec![usize::MAX; schemas.len()];
        match_in_order(schemas, &pool, &order, &ranges, 0, Substitution::new(), &mut used, out);
    }
}

#[allow(clippy::too_many_arguments)]
fn match_in_order(
    schemas: &[Formula],
    pool: &Pool,
    order: &[usize],
    ranges: &[(usize, usize)],
    k: usize,
    s: Substitution,
    used: &mut Vec<usize>,
    out: &mut Vec<(Substitution, Vec<usize>)>,
) {
    if k == order.len() {
        out.push((s, used.clone()));
        return;
    }
    let slot = order[k];
    let (lo, hi) = ranges[slot];
    let schema = &schemas[slot];
    let mut try_premise = |i: usize, used: &mut Vec<usize>| {
        if used.contains(&i) {
            return;
        }
        if let Some(next) = match_schema_with(schema, &pool.premises[i], &s) {
            used[slot] = i;
            match_in_order(schemas, pool, order, ranges, k + 1, next, used, out);
            used[slot] = usize::MAX;
        }
    };
    match pool.candidates(&apply_substitution(schema, &s)) {
        Some(candidates) => {
            for &i in candidates.iter().filter(|&&i| (lo..hi).contains(&i)) {
                try_premise(i, used);
            }
        }
        None => {
            for i in lo..hi {
                try_premise(i, used);
            }
        }
    }
}

/// Instantiates the conclusion, ranging leftover constant metas over the
/// premise constants.
fn complete_conclusion(
    conclusion: &Formula,
    s: &Substitution,
    constants: &BTreeSet<String>,
) -> Vec<Formula> {
    let mut unbound: Vec<Term> = Vec::new();
    conclusion.visit(&mut |g| {
        if let Formula::Atom(_, args) = g {
            for t in args {
                if matches!(t, Term::Meta(_)) && s.term(t).is_none() && !unbound.contains(t) {
                    unbound.push(t.clone());
                }
            }
        }
    });
    let mut subs = vec![s.clone()];
    for meta in &unbound {
        let mut next = Vec::new();
        for base in &subs {
            for c in constants {
                let mut t = base.clone();
                t.bind_term(meta.clone(), Term::Const(c.clone()));
                next.push(t);
            }
        }
        subs = next;
    }
    subs.iter()
        .map(|s| apply_substitution(conclusion, s))
        .filter(|f| !f.has_metas())
        .collect()
}

/// Bijective matches of a default pattern against chosen premises and
/// defaults. Relative priority order of the template must be preserved and
/// metavariables must map injectively.
pub(crate) fn default_matches(
    p: &DefaultPattern,
    premises: &[Formula],
    defaults: &[DefaultRule],
    premise_pool: &[usize],
    default_pool: &[usize],
) -> Vec<(Substitution, Vec<usize>, Vec<usize>)> {
    let slots = p.formula_slots();
    let mut formula_matches = Vec::new();
    let schemas: Vec<Formula> = slots.into_iter().cloned().collect();
    let pool: Vec<Formula> = premise_pool.iter().map(|&i| premises[i].clone()).collect();
    match_slots(&schemas, &pool, 0, &mut formula_matches);
    let mut out = Vec::new();
    for (s, tuple) in formula_matches {
        let tuple: Vec<usize> = tuple.iter().map(|&i| premise_pool[i]).collect();
        let mut dmatches = Vec::new();
        match_default_slots(&p.defaults, defaults, default_pool, 0, s, &mut Vec::new(), &mut dmatches);
        for (s, dt) in dmatches {
            if !injective(&s) || !priorities_agree(&p.defaults, defaults, &dt) {
                continue;
            }
            out.push((s, tuple.clone(), dt));
        }
    }
    out
}

fn match_default_slots(
    schemas: &[DefaultRule],
    defaults: &[DefaultRule],
    pool: &[usize],
    slot: usize,
    s: Substitution,
    used: &mut Vec<usize>,
    out: &mut Vec<(Substitution, Vec<usize>)>,
) {
    if slot == schemas.len() {
        out.push((s, used.clone()));
        return;
    }
    for &i in pool {
        if used.contains(&i) {
            continue;
        }
        if let Some(next) = match_default(&schemas[slot], &defaults[i], &s) {
            used.push(i);
            match_default_slots(schemas, defaults, pool, slot + 1, next, used, out);
            used.pop();
        }
    }
}

fn priorities_agree(schemas: &[DefaultRule], defaults: &[DefaultRule], chosen: &[usize]) -> bool {
    for a in 0..schemas.len() {
        for b in 0..schemas.len() {
            let want = schemas[a].priority.cmp(&schemas[b].priority);
            let got = defaults[chosen[a]].priority.cmp(&defaults[chosen[b]].priority);
            if want != got {
                return false;
            }
        }
    }
    true
}

/// Distinct predicate and constant metavariables map to distinct symbols.
fn injective(s: &Substitution) -> bool {
    let mut preds = HashSet::new();
    if !s.predicates().all(|(_, v)| preds.insert(v.clone())) {
        return false;
    }
    let mut consts = HashSet::new();
    s.terms()
        .filter(|(k, _)| matches!(k, Term::Meta(_)))
        .all(|(_, v)| consts.insert(v.clone()))
}

/// Machine-readable description of the catalog.
pub fn dump_json() -> serde_json::Value {
    use serde_json::json;
    let rules: Vec<_> = catalog()
        .iter()
        .map(|r| {
            let body = match &r.body {
                SchemaBody::Deductive(dirs) => json!({
                    "directions": dirs.iter().map(|d| json!({
                        "premises": d.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                        "conclusion": d.conclusion.to_string(),
                    })).collect::<Vec<_>>(),
                }),
                SchemaBody::Default(p) => json!({
                    "facts": p.facts.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                    "hard_rules": p.hard_rules.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                    "defaults": p.defaults.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                    "conclusion": p.conclusion.to_string(),
                }),
            };
            json!({
                "id": r.id,
                "name": r.name,
                "family": r.family,
                "class": r.logic_class,
                "bidirectional": r.bidirectional,
                "premises": r.premise_schemas().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "conclusion": r.conclusion_schema().to_string(),
                "schema": body,
            })
        })
        .collect();
    let count = |f: Family| catalog().by_family(f).count();
    json!({
        "total": catalog().len(),
        "counts": {
            "PL": count(Family::PL),
            "FOL": count(Family::FOL),
            "MV": count(Family::MV),
            "NM": count(Family::NM),
        },
        "rules": rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn fs(items: &[&str]) -> Vec<Formula> {
        items.iter().map(|s| f(s)).collect()
    }

    fn pl() -> BTreeSet<LogicClass> {
        [LogicClass::PL].into_iter().collect()
    }

    #[test]
    fn family_counts() {
        let c = catalog();
        assert_eq!(c.by_family(Family::PL).count(), 12);
        assert_eq!(c.by_family(Family::FOL).count(), 13);
        assert_eq!(c.by_family(Family::MV).count(), 7);
        assert_eq!(c.by_family(Family::NM).count(), 8);
        assert_eq!(c.by_class(LogicClass::PL).count(), 12);
        assert_eq!(c.len(), 40);
        assert!(c.get("ZZZ").is_none());
        assert!(c.get("MI_F").is_none());
    }

    #[test]
    fn ids_unique_and_ordered() {
        let ids: Vec<_> = catalog().iter().map(|r| r.id).collect();
        assert_eq!(ids, RULE_ORDER.to_vec());
        let set: BTreeSet<_> = ids.iter().collect();
        assert_eq!(set.len(), ids.len());
    }

    #[test]
    fn mv5_premises() {
        let r = catalog().get("MV5").unwrap();
        assert_eq!(
            r.premise_schemas(),
            fs(&["forall x. ($p(x) -> exists y. $r(y, x))", "$p($a)"])
        );
    }

    #[test]
    fn pl_schemas_are_quantifier_free() {
        for r in catalog().by_family(Family::PL) {
            for d in r.directions() {
                for p in d.premises.iter().chain([&d.conclusion]) {
                    assert!(p.is_quantifier_free(), "{}", r.id);
                    assert!(p.predicates().is_empty(), "{}", r.id);
                }
            }
        }
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_rule("MP", &fs(&["rain -> wet", "rain"])).unwrap(), fs(&["wet"]));
        assert_eq!(apply_rule("DS", &fs(&["p | q", "~p"])).unwrap(), fs(&["q"]));
        assert!(apply_rule("MT", &fs(&["p -> q", "p"])).unwrap().is_empty());
        assert_eq!(
            apply_rule("ZZZ", &[]),
            Err(RuleError::UnknownRule("ZZZ".into()))
        );
    }

    #[test]
    fn bidirectional_both_ways() {
        assert_eq!(apply_rule("MI", &fs(&["p -> q"])).unwrap(), fs(&["~p | q"]));
        assert_eq!(apply_rule("MI", &fs(&["~p | q"])).unwrap(), fs(&["p -> q"]));
        assert_eq!(apply_rule("DMT", &fs(&["~p | ~q"])).unwrap(), fs(&["~(p & q)"]));
    }

    #[test]
    fn fol_application() {
        assert_eq!(
            apply_rule("MP_F", &fs(&["forall x. (bird(x) -> flies(x))", "bird(tweety)"])).unwrap(),
            fs(&["flies(tweety)"])
        );
        assert_eq!(
            apply_rule("UI", &fs(&["forall y. p(y)", "q(a)", "q(b)"])).unwrap(),
            fs(&["p(a)", "p(b)"])
        );
        assert_eq!(apply_rule("EG", &fs(&["p(a)"])).unwrap(), fs(&["exists x. p(x)"]));
    }

    #[test]
    fn applicable_examples() {
        let hits = applicable_rules(&fs(&["p -> q", "p"]), &pl());
        let shown: Vec<_> = hits
            .iter()
            .map(|h| (h.rule_id, h.premises.clone(), h.conclusion.to_string()))
            .collect();
        assert_eq!(
            shown,
            vec![("MP", vec![0, 1], "q".to_string()), ("MI", vec![0], "~p | q".to_string())]
        );
        assert!(applicable_rules(&[], &pl()).is_empty());
        let hits = applicable_rules(&fs(&["p -> q", "q -> r"]), &pl());
        assert!(hits
            .iter()
            .any(|h| h.rule_id == "HS" && h.premises == [0, 1] && h.conclusion == f("p -> r")));
    }

    #[test]
    fn default_pattern_application() {
        let r = catalog().get("DRI").unwrap();
        let p = r.default_pattern().unwrap();
        assert_eq!(p.defaults.len(), 1);
        let premises = fs(&["bird(tweety)", "red(tweety)"]);
        let defaults = vec![crate::formula::parse_default("bird(x) : flies(x) / flies(x)").unwrap()];
        assert_eq!(
            apply_rule_with_defaults("DRI", &premises, &defaults).unwrap(),
            fs(&["flies(tweety)"])
        );
        assert!(apply_rule("DRI", &premises).unwrap().is_empty());
    }

    #[test]
    fn priority_order_must_agree() {
        use crate::formula::parse_default;
        let premises = fs(&["p(a)", "q(a)"]);
        let ok = vec![
            parse_default("p(x) : r(x) / r(x) @ 0").unwrap(),
            parse_default("q(x) : ~r(x) / ~r(x) @ 1").unwrap(),
        ];
        assert_eq!(apply_rule_with_defaults("RAP", &premises, &ok).unwrap(), fs(&["r(a)"]));
        let flat = vec![
            parse_default("p(x) : r(x) / r(x)").unwrap(),
            parse_default("q(x) : ~r(x) / ~r(x)").unwrap(),
        ];
        assert!(apply_rule_with_defaults("RAP", &premises, &flat).unwrap().is_empty());
    }

    #[test]
    fn matches_step_checks_conclusion() {
        let mp = catalog().get("MP").unwrap();
        assert!(matches_step(mp, &fs(&["p -> q", "p"]), &[], &f("q")));
        assert!(matches_step(mp, &fs(&["p", "p -> q"]), &[], &f("q")));
        assert!(!matches_step(mp, &fs(&["p -> q", "q"]), &[], &f("p")));
        let ui = catalog().get("UI").unwrap();
        assert!(matches_step(ui, &fs(&["forall x. p(x)"]), &[], &f("p(c9)")));
    }

    #[test]
    fn dump_counts() {
        let d = dump_json();
        assert_eq!(d["counts"]["PL"], 12);
        assert_eq!(d["counts"]["FOL"], 13);
        assert_eq!(d["counts"]["MV"], 7);
        assert_eq!(d["counts"]["NM"], 8);
        assert_eq!(d["rules"].as_array().unwrap().len(), 40);
    }
}
