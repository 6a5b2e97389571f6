//! The logical language shared by every other module.
//!
//! Formulas cover propositional symbols, predicate applications over
//! constants and variables, the usual connectives and the two quantifiers.
//! Schemas reuse the same tree: a [`Formula::Meta`] stands for an arbitrary
//! formula, a [`Pred::Meta`] for an arbitrary predicate symbol and a
//! [`Term::Meta`] for an arbitrary constant. Object-level formulas never
//! contain any of the three.

mod parse;
mod render;
mod subst;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use parse::{parse_default, parse_formula, parse_open_formula, ParseError};
pub use render::{render_default, render_formula};
pub use subst::{
    alpha_eq, apply_substitution, apply_substitution_traced, match_default, match_schema,
    match_schema_with, Applied, Substitution,
};

/// Argument of a predicate application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
    /// Schema placeholder for a constant, written `$a`.
    Meta(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn meta(name: impl Into<String>) -> Self {
        Term::Meta(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) | Term::Meta(n) => n,
        }
    }
}

/// Predicate symbol of an atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Name(String),
    /// Schema placeholder for a predicate symbol, written `$p(...)`.
    Meta(String),
}

impl Pred {
    pub fn name(&self) -> &str {
        match self {
            Pred::Name(n) | Pred::Meta(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Pred, Vec<Term>),
    /// Schema placeholder for a whole formula, written `PHI`, `P`, ...
    Meta(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    ForAll(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    /// A propositional symbol.
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Atom(Pred::Name(name.into()), Vec::new())
    }

    pub fn pred(name: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom(Pred::Name(name.into()), args)
    }

    pub fn meta(name: impl Into<String>) -> Self {
        Formula::Meta(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Self {
        Formula::ForAll(var.into(), Box::new(body))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }

    /// Negation that cancels an outer `~` instead of stacking another one.
    pub fn negated(&self) -> Formula {
        match self {
            Formula::Not(inner) => (**inner).clone(),
            other => Formula::not(other.clone()),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(..))
    }

    /// Atom or negated atom.
    pub fn is_literal(&self) -> bool {
        match self {
            Formula::Atom(..) => true,
            Formula::Not(inner) => inner.is_atom(),
            _ => false,
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom(..) | Formula::Meta(_) => true,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::ForAll(..) | Formula::Exists(..) => false,
        }
    }

    /// Whether every atom is a propositional symbol and no quantifier occurs.
    pub fn is_propositional(&self) -> bool {
        self.is_quantifier_free() && self.predicates().values().all(|&arity| arity == 0)
    }

    pub fn has_metas(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| match f {
            Formula::Meta(_) => found = true,
            Formula::Atom(p, args) => {
                if matches!(p, Pred::Meta(_)) || args.iter().any(|t| matches!(t, Term::Meta(_))) {
                    found = true;
                }
            }
            _ => {}
        });
        found
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::Atom(_, args) => {
                    for t in args {
                        if let Term::Var(v) = t {
                            if !bound.contains(v) {
                                out.insert(v.clone());
                            }
                        }
                    }
                }
                Formula::Meta(_) => {}
                Formula::Not(a) => go(a, bound, out),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Implies(a, b)
                | Formula::Iff(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                    bound.push(v.clone());
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn variable_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::ForAll(v, _) | Formula::Exists(v, _) => {
                out.insert(v.clone());
            }
            Formula::Atom(_, args) => {
                for t in args {
                    if let Term::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
            _ => {}
        });
        out
    }

    /// Predicate names with their arities; propositional symbols have arity 0.
    pub fn predicates(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.visit(&mut |f| {
            if let Formula::Atom(Pred::Name(n), args) = f {
                out.insert(n.clone(), args.len());
            }
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(_, args) = f {
                for t in args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
        });
        out
    }

    /// Distinct atoms in first-occurrence order.
    pub fn atoms(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = Vec::new();
        self.visit(&mut |f| {
            if f.is_atom() && !out.contains(f) {
                out.push(f.clone());
            }
        });
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(..) | Formula::Meta(_) => 1,
            Formula::Not(a) | Formula::ForAll(_, a) | Formula::Exists(_, a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Atom(..) | Formula::Meta(_) => {}
            Formula::Not(a) | Formula::ForAll(_, a) | Formula::Exists(_, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Name of the head connective, used for compatibility diagnostics.
    pub fn head(&self) -> &'static str {
        match self {
            Formula::Atom(..) => "atom",
            Formula::Meta(_) => "meta",
            Formula::Not(_) => "~",
            Formula::And(..) => "&",
            Formula::Or(..) => "|",
            Formula::Implies(..) => "->",
            Formula::Iff(..) => "<->",
            Formula::ForAll(..) => "forall",
            Formula::Exists(..) => "exists",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_formula(self))
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_formula(self))
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

/// A Reiter default `prerequisite : justifications / consequent`.
///
/// Free variables are schematic: the rule stands for all of its ground
/// instances over the constants of the theory it belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefaultRule {
    pub prerequisite: Formula,
    pub justifications: Vec<Formula>,
    pub consequent: Formula,
    /// Lower value wins.
    pub priority: u32,
}

impl DefaultRule {
    /// The common normal default `pre : cons / cons`.
    pub fn normal(prerequisite: Formula, consequent: Formula) -> Self {
        DefaultRule {
            prerequisite,
            justifications: vec![consequent.clone()],
            consequent,
            priority: 0,
        }
    }

    pub fn with_priority(mut self, priority: u32) -> Self {
        self.priority = priority;
        self
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = self.prerequisite.free_vars();
        for j in &self.justifications {
            out.extend(j.free_vars());
        }
        out.extend(self.consequent.free_vars());
        out
    }

    pub fn parts(&self) -> impl Iterator<Item = &Formula> {
        std::iter::once(&self.prerequisite)
            .chain(self.justifications.iter())
            .chain(std::iter::once(&self.consequent))
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.parts().flat_map(|f| f.constants()).collect()
    }

    pub fn predicates(&self) -> BTreeMap<String, usize> {
        self.parts().flat_map(|f| f.predicates()).collect()
    }
}

impl fmt::Display for DefaultRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_default(self))
    }
}

impl Serialize for DefaultRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_default(self))
    }
}

impl<'de> Deserialize<'de> for DefaultRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_default(&text).map_err(serde::de::Error::custom)
    }
}

/// Predicate arities across a set of formulas, or the first clash found.
pub fn signature<'a>(
    formulas: impl IntoIterator<Item = &'a Formula>,
) -> Result<BTreeMap<String, usize>, (String, usize, usize)> {
    let mut sig = BTreeMap::new();
    for f in formulas {
        let mut clash = None;
        f.visit(&mut |g| {
            if let Formula::Atom(Pred::Name(n), args) = g {
                match sig.get(n) {
                    Some(&a) if a != args.len() && clash.is_none() => {
                        clash = Some((n.clone(), a, args.len()))
                    }
                    None => {
                        sig.insert(n.clone(), args.len());
                    }
                    _ => {}
                }
            }
        });
        if let Some(c) = clash {
            return Err(c);
        }
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negated_cancels_double_negation() {
        let p = Formula::prop("p");
        assert_eq!(Formula::not(p.clone()).negated(), p);
        assert_eq!(p.negated(), Formula::not(p.clone()));
    }

    #[test]
    fn free_vars_respect_binders() {
        let f = parse_open_formula("forall x. r(x, y)").unwrap();
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
    }

    #[test]
    fn signature_reports_arity_clash() {
        let a = parse_formula("p(a)").unwrap();
        let b = parse_formula("p(a, b)").unwrap();
        assert_eq!(signature([&a, &b]), Err(("p".into(), 1, 2)));
    }
}
