//! Natural-language rendering of grounded formulas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lexicon::PredicateTemplate;
use crate::formula::{DefaultRule, Formula, Pred, Term};

/// The phrase each symbol of one instance is grounded to.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolMap {
    pub propositions: BTreeMap<String, String>,
    pub predicates: BTreeMap<String, PredicateTemplate>,
    pub constants: BTreeMap<String, String>,
}

impl SymbolMap {
    fn term(&self, t: &Term) -> String {
        match t {
            Term::Const(c) => self.constants.get(c).cloned().unwrap_or_else(|| c.clone()),
            Term::Var(v) | Term::Meta(v) => v.clone(),
        }
    }

    fn atom(&self, p: &Pred, args: &[Term]) -> String {
        let name = p.name();
        if args.is_empty() {
            if let Some(s) = self.propositions.get(name) {
                return s.clone();
            }
            return name.to_string();
        }
        let rendered: Vec<String> = args.iter().map(|t| self.term(t)).collect();
        match self.predicates.get(name) {
            Some(t) => t.render(&rendered),
            None => format!("{name}({})", rendered.join(", ")),
        }
    }

    /// Lower-case clause for `f`, suitable for embedding.
    pub fn clause(&self, f: &Formula) -> String {
        match f {
            Formula::Atom(p, args) => self.atom(p, args),
            Formula::Meta(m) => m.clone(),
            Formula::Not(inner) => match &**inner {
                Formula::And(a, b) => format!(
                    "it is not the case that both {} and {}",
                    self.wrapped(a, Ctx::Conj),
                    self.wrapped(b, Ctx::Conj)
                ),
                Formula::Or(a, b) => format!(
                    "neither {} nor {}",
                    self.wrapped(a, Ctx::Conj),
                    self.wrapped(b, Ctx::Conj)
                ),
                other => format!("it is not the case that {}", self.wrapped(other, Ctx::Neg)),
            },
            Formula::And(a, b) => {
                format!("{} and {}", self.wrapped(a, Ctx::Conj), self.wrapped(b, Ctx::Conj))
            }
            Formula::Or(a, b) => {
                format!("either {} or {}", self.wrapped(a, Ctx::Conj), self.wrapped(b, Ctx::Conj))
            }
            Formula::Implies(a, b) => {
                format!("if {}, {}", self.wrapped(a, Ctx::Cond), self.wrapped(b, Ctx::Then))
            }
            Formula::Iff(a, b) => format!(
                "{} if and only if {}",
                self.wrapped(a, Ctx::Conj),
                self.wrapped(b, Ctx::Conj)
            ),
            Formula::ForAll(..) => {
                let (vars, body) = binder_run(f, true);
                format!("for every {}, {}", join_vars(&vars), self.clause(body))
            }
            Formula::Exists(..) => {
                let (vars, body) = binder_run(f, false);
                if vars.len() == 1 {
                    format!("there is some {} such that {}", vars[0], self.clause(body))
                } else {
                    format!("there are some {} such that {}", join_vars(&vars), self.clause(body))
                }
            }
        }
    }

    fn wrapped(&self, f: &Formula, ctx: Ctx) -> String {
        let compound = match f {
            Formula::Atom(..) | Formula::Meta(_) => false,
            Formula::Not(inner) => ctx == Ctx::Neg || !matches!(**inner, Formula::Atom(..)),
            Formula::And(..) | Formula::Or(..) => ctx != Ctx::Cond,
            Formula::Implies(..) => ctx != Ctx::Then,
            Formula::Iff(..) | Formula::ForAll(..) | Formula::Exists(..) => true,
        };
        if compound {
            format!("({})", self.clause(f))
        } else {
            self.clause(f)
        }
    }

    /// A full sentence: capitalised, with a final period.
    pub fn sentence(&self, f: &Formula) -> String {
        sentence(&self.clause(f))
    }

    pub fn default_clause(&self, d: &DefaultRule, show_priority: bool) -> String {
        let vars: Vec<String> = d.free_vars().into_iter().collect();
        let mut out = String::new();
        if !vars.is_empty() {
            out.push_str(&format!("for any {}, ", join_vars(&vars)));
        }
        out.push_str(&format!(
            "if {}, then by default {}",
            self.wrapped(&d.prerequisite, Ctx::Cond),
            self.wrapped(&d.consequent, Ctx::Then)
        ));
        let extra: Vec<&Formula> = d.justifications.iter().filter(|j| **j != d.consequent).collect();
        if !extra.is_empty() {
            let js: Vec<String> = extra.iter().map(|j| self.wrapped(j, Ctx::Conj)).collect();
            out.push_str(&format!(
                ", provided it is consistent to assume that {}",
                js.join(" and ")
            ));
        }
        if show_priority {
            out.push_str(&format!(" (priority {})", d.priority));
        }
        out
    }

    pub fn default_sentence(&self, d: &DefaultRule, show_priority: bool) -> String {
        sentence(&self.default_clause(d, show_priority))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Neg,
    Conj,
    Cond,
    Then,
}

fn binder_run(f: &Formula, universal: bool) -> (Vec<String>, &Formula) {
    let mut vars = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Formula::ForAll(v, b) if universal => {
                vars.push(v.clone());
                cur = b;
            }
            Formula::Exists(v, b) if !universal => {
                vars.push(v.clone());
                cur = b;
            }
            _ => return (vars, cur),
        }
    }
}

fn join_vars(vars: &[String]) -> String {
    match vars {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Capitalises the first letter and ensures a closing period.
pub fn sentence(clause: &str) -> String {
    let clause = clause.trim();
    let mut out = match clause.char_indices().find(|(_, c)| c.is_alphabetic()) {
        Some((i, c)) => {
            format!("{}{}{}", &clause[..i], c.to_uppercase(), &clause[i + c.len_utf8()..])
        }
        None => clause.to_string(),
    };
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_default, parse_formula};

    fn map() -> SymbolMap {
        let mut m = SymbolMap::default();
        m.propositions.insert("p1".into(), "the road ahead is open".into());
        m.propositions.insert("p2".into(), "vehicles may proceed".into());
        m.propositions.insert("p3".into(), "the lights are green".into());
        m.predicates.insert(
            "P1".into(),
            PredicateTemplate { arity: 1, template: "{0} is a bird".into() },
        );
        m.predicates.insert(
            "P2".into(),
            PredicateTemplate { arity: 1, template: "{0} can fly".into() },
        );
        m.predicates.insert(
            "P3".into(),
            PredicateTemplate { arity: 2, template: "{0} follows {1}".into() },
        );
        m.constants.insert("c1".into(), "Tweety".into());
        m
    }

    fn s(src: &str) -> String {
        map().sentence(&parse_formula(src).unwrap())
    }

    #[test]
    fn connectives() {
        assert_eq!(s("p1 -> p2"), "If the road ahead is open, vehicles may proceed.");
        assert_eq!(s("~p1"), "It is not the case that the road ahead is open.");
        assert_eq!(s("p1 | ~p2"), "Either the road ahead is open or it is not the case that vehicles may proceed.");
        assert_eq!(s("~(p1 & p2)"), "It is not the case that both the road ahead is open and vehicles may proceed.");
        assert_eq!(
            s("(p1 | p2) & p3"),
            "(Either the road ahead is open or vehicles may proceed) and the lights are green."
        );
        assert_eq!(s("p1 <-> p3"), "The road ahead is open if and only if the lights are green.");
    }

    #[test]
    fn quantifiers_and_defaults() {
        assert_eq!(s("forall x. P1(x) -> P2(x)"), "For every x, if x is a bird, x can fly.");
        assert_eq!(s("exists x. P3(x, c1)"), "There is some x such that x follows Tweety.");
        assert_eq!(s("forall x. forall y. P3(x, y)"), "For every x and y, x follows y.");
        let d = parse_default("P1(x) : P2(x) / P2(x)").unwrap();
        assert_eq!(
            map().default_sentence(&d, false),
            "For any x, if x is a bird, then by default x can fly."
        );
        assert_eq!(
            map().default_sentence(&d.with_priority(1), true),
            "For any x, if x is a bird, then by default x can fly (priority 1)."
        );
    }

    #[test]
    fn sentence_helpers() {
        assert_eq!(sentence("a b"), "A b.");
        assert_eq!(sentence("(x) y?"), "(X) y?");
    }
}
