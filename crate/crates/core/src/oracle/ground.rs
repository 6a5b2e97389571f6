//! Grounding closed formulas over a finite domain.

use std::collections::BTreeMap;

use crate::formula::{Formula, Pred, Term};

use super::sat::{AtomTable, Prop};

/// Ground atom: predicate name and element tuple.
pub(crate) type GroundAtom = (String, Vec<usize>);

pub(crate) struct Grounder<'a> {
    pub domain: usize,
    pub constants: &'a BTreeMap<String, usize>,
    pub atoms: &'a mut AtomTable<GroundAtom>,
}

impl Grounder<'_> {
    pub(crate) fn ground(&mut self, f: &Formula) -> Prop {
        let mut env = Vec::new();
        self.go(f, &mut env)
    }

    fn term(&self, t: &Term, env: &[(String, usize)]) -> usize {
        match t {
            Term::Var(x) => env
                .iter()
                .rev()
                .find(|(v, _)| v == x)
                .map(|(_, e)| *e)
                .unwrap_or_else(|| panic!("free variable {x} reached the grounder")),
            Term::Const(c) => *self
                .constants
                .get(c)
                .unwrap_or_else(|| panic!("constant {c} has no interpretation")),
            Term::Meta(m) => panic!("metavariable ${m} reached the grounder"),
        }
    }

    fn go(&mut self, f: &Formula, env: &mut Vec<(String, usize)>) -> Prop {
        match f {
            Formula::Atom(Pred::Name(p), args) => {
                let tuple = args.iter().map(|t| self.term(t, env)).collect();
                Prop::Var(self.atoms.get_or_insert((p.clone(), tuple)))
            }
            Formula::Atom(Pred::Meta(m), _) => panic!("metavariable ${m} reached the grounder"),
            Formula::Meta(m) => panic!("metavariable {m} reached the grounder"),
            Formula::Not(a) => Prop::not(self.go(a, env)),
            Formula::And(a, b) => {
                let (x, y) = (self.go(a, env), self.go(b, env));
                Prop::and(vec![x, y])
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.go(a, env), self.go(b, env));
                Prop::or(vec![x, y])
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.go(a, env), self.go(b, env));
                Prop::implies(x, y)
            }
            Formula::Iff(a, b) => {
                let (x, y) = (self.go(a, env), self.go(b, env));
                Prop::iff(x, y)
            }
            Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                let mut parts = Vec::with_capacity(self.domain);
                for e in 0..self.domain {
                    env.push((v.clone(), e));
                    parts.push(self.go(body, env));
                    env.pop();
                }
                if matches!(f, Formula::ForAll(..)) {
                    Prop::and(parts)
                } else {
                    Prop::or(parts)
                }
            }
        }
    }
}
