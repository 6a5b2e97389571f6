//! Bounded first-order entailment by finite-model search.
//!
//! For each domain size and each way of interpreting the constants (up to
//! renaming elements), the premises and the negated goal are grounded and
//! every assignment of the ground atoms is searched. Any satisfying
//! assignment is a countermodel.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, Pred, Term};

use super::ground::{GroundAtom, Grounder};
use super::sat::{satisfiable, AtomTable, Prop, SatOutcome};
use super::{
    check_closed, Countermodel, EntailmentVerdict, OracleError, MAX_ARITY, MAX_DOMAIN_LIMIT,
};

/// A finite interpretation. Elements are `0..domain_size`; propositional
/// symbols are relations over the empty tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub domain_size: usize,
    pub constants: BTreeMap<String, usize>,
    pub relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl Structure {
    /// Truth of a closed formula. Symbols the structure does not mention
    /// are false; constants it does not interpret make the result `None`.
    pub fn satisfies(&self, f: &Formula) -> Option<bool> {
        self.eval(f, &mut Vec::new())
    }

    fn eval(&self, f: &Formula, env: &mut Vec<(String, usize)>) -> Option<bool> {
        Some(match f {
            Formula::Atom(Pred::Name(p), args) => {
                let mut tuple = Vec::with_capacity(args.len());
                for t in args {
                    tuple.push(match t {
                        Term::Var(x) => env.iter().rev().find(|(v, _)| v == x)?.1,
                        Term::Const(c) => *self.constants.get(c)?,
                        Term::Meta(_) => return None,
                    });
                }
                self.relations.get(p).is_some_and(|r| r.contains(&tuple))
            }
            Formula::Atom(Pred::Meta(_), _) | Formula::Meta(_) => return None,
            Formula::Not(a) => !self.eval(a, env)?,
            Formula::And(a, b) => self.eval(a, env)? & self.eval(b, env)?,
            Formula::Or(a, b) => self.eval(a, env)? | self.eval(b, env)?,
            Formula::Implies(a, b) => !self.eval(a, env)? | self.eval(b, env)?,
            Formula::Iff(a, b) => self.eval(a, env)? == self.eval(b, env)?,
            Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                let universal = matches!(f, Formula::ForAll(..));
                let mut acc = universal;
                for e in 0..self.domain_size {
                    env.push((v.clone(), e));
                    let r = self.eval(body, env);
                    env.pop();
                    let r = r?;
                    if universal {
                        acc &= r;
                    } else {
                        acc |= r;
                    }
                }
                acc
            }
        })
    }
}

fn validate(all: &[&Formula], max_domain: usize) -> Result<(), OracleError> {
    if max_domain > MAX_DOMAIN_LIMIT {
        return Err(OracleError::DomainTooLarge {
            requested: max_domain,
        });
    }
    let sig = check_closed(all)?;
    if let Some((name, &arity)) = sig.iter().find(|(_, &a)| a > MAX_ARITY) {
        return Err(OracleError::ArityTooLarge {
            name: name.clone(),
            arity,
        });
    }
    Ok(())
}

/// Constant interpretations up to renaming of elements: restricted growth
/// strings of length `k` over `n` values.
fn constant_maps(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let limit = cur.iter().max().map_or(0, |m| m + 1).min(n - 1);
        for v in 0..=limit {
            cur.push(v);
            go(k, n, cur, out);
            cur.pop();
        }
    }
    go(k, n, &mut cur, &mut out);
    out
}

enum Search {
    Model(Structure),
    None,
    Exhausted,
}

fn search(formulas: &[&Formula], max_domain: usize, budget: u64) -> Search {
    let constants: Vec<String> = formulas
        .iter()
        .flat_map(|f| f.constants())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let predicates: BTreeMap<String, usize> =
        formulas.iter().flat_map(|f| f.predicates()).collect();
    let mut budget = budget;
    let mut exhausted = false;
    for n in 1..=max_domain {
        for map in constant_maps(constants.len(), n) {
            let interp: BTreeMap<String, usize> =
                constants.iter().cloned().zip(map.iter().copied()).collect();
            let mut atoms: AtomTable<GroundAtom> = AtomTable::new();
            let props: Vec<Prop> = {
                let mut g = Grounder {
                    domain: n,
                    constants: &interp,
                    atoms: &mut atoms,
                };
                formulas.iter().map(|f| g.ground(f)).collect()
            };
            match satisfiable(&props, atoms.len(), &mut budget) {
                SatOutcome::Sat(model) => {
                    let mut relations: BTreeMap<String, BTreeSet<Vec<usize>>> = predicates
                        .keys()
                        .map(|p| (p.clone(), BTreeSet::new()))
                        .collect();
                    for (i, (p, tuple)) in atoms.keys().iter().enumerate() {
                        if model[i] {
                            relations.entry(p.clone()).or_default().insert(tuple.clone());
                        }
                    }
                    return Search::Model(Structure {
                        domain_size: n,
                        constants: interp,
                        relations,
                    });
                }
                SatOutcome::Unsat => {}
                SatOutcome::Exhausted => {
                    exhausted = true;
                    budget = 0;
                }
            }
            if exhausted {
                return Search::Exhausted;
            }
        }
    }
    Search::None
}

pub(crate) fn entails(
    premises: &[Formula],
    goal: &Formula,
    max_domain: usize,
    budget: u64,
) -> Result<EntailmentVerdict, OracleError> {
    let negated = Formula::not(goal.clone());
    let all: Vec<&Formula> = premises.iter().chain(std::iter::once(goal)).collect();
    validate(&all, max_domain)?;
    let mut input: Vec<&Formula> = premises.iter().collect();
    input.push(&negated);
    Ok(match search(&input, max_domain, budget) {
        Search::Model(s) => {
            let bound = Some(s.domain_size);
            EntailmentVerdict::refuted(Countermodel::Structure(s), bound)
        }
        Search::None => EntailmentVerdict::entailed(Some(max_domain)),
        Search::Exhausted => EntailmentVerdict::undetermined(Some(max_domain)),
    })
}

pub(crate) fn find_model(
    formulas: &[Formula],
    max_domain: usize,
    budget: u64,
) -> Result<Option<Structure>, OracleError> {
    let all: Vec<&Formula> = formulas.iter().collect();
    validate(&all, max_domain)?;
    match search(&all, max_domain, budget) {
        Search::Model(s) => Ok(Some(s)),
        Search::None => Ok(None),
        Search::Exhausted => Err(OracleError::BudgetExhausted),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::oracle::Status;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn universal_instantiation() {
        let v = entails(&[f("forall x. p(x)")], &f("p(a)"), 3, 1 << 20).unwrap();
        assert_eq!(v.status, Status::Entailed);
        assert_eq!(v.domain_bound, Some(3));
    }

    #[test]
    fn existential_does_not_name_a_witness() {
        let v = entails(&[f("exists x. p(x)")], &f("p(a)"), 3, 1 << 20).unwrap();
        assert_eq!(v.status, Status::NotEntailed);
        let Some(Countermodel::Structure(s)) = v.counterexample else {
            panic!()
        };
        assert_eq!(s.domain_size, 2);
        assert_eq!(s.satisfies(&f("exists x. p(x)")), Some(true));
        assert_eq!(s.satisfies(&f("p(a)")), Some(false));
    }

    #[test]
    fn existential_generalization() {
        assert!(entails(&[f("p(a)")], &f("exists x. p(x)"), 3, 1 << 20)
            .unwrap()
            .is_entailed());
    }

    #[test]
    fn limits() {
        assert_eq!(
            entails(&[], &f("p"), 5, 10).unwrap_err(),
            OracleError::DomainTooLarge { requested: 5 }
        );
        assert!(matches!(
            entails(&[], &f("p(a, b, c, d)"), 3, 10),
            Err(OracleError::ArityTooLarge { .. })
        ));
    }

    #[test]
    fn budget_gives_undetermined() {
        let premises = [f("forall x. (p(x) | q(x))")];
        let v = entails(&premises, &f("exists x. (p(x) & q(x))"), 3, 0).unwrap();
        assert_eq!(v.status, Status::Undetermined);
    }

    #[test]
    fn rgs_counts() {
        // Stirling numbers of the second kind summed up to n blocks
        assert_eq!(constant_maps(0, 3).len(), 1);
        assert_eq!(constant_maps(3, 1).len(), 1);
        assert_eq!(constant_maps(3, 2).len(), 4);
        assert_eq!(constant_maps(3, 3).len(), 5);
        assert_eq!(constant_maps(4, 3).len(), 14);
    }
}
