//! Propositional entailment over ground atoms.
//!
//! Ground first-order atoms such as `wet(road)` count as propositional
//! symbols here; only quantifiers are rejected.

use std::collections::BTreeMap;

use crate::formula::{Formula, Pred, Term};

use super::sat::{satisfiable, Prop, SatOutcome};
use super::{check_closed, Countermodel, EntailmentVerdict, OracleError};

/// Atoms of the inputs in sorted concrete-syntax order.
fn collect_atoms(formulas: &[&Formula]) -> Vec<Formula> {
    let mut set: BTreeMap<String, Formula> = BTreeMap::new();
    for f in formulas {
        for a in f.atoms() {
            set.insert(a.to_string(), a);
        }
    }
    set.into_values().collect()
}

fn compile(f: &Formula, index: &BTreeMap<Formula, usize>) -> Prop {
    match f {
        Formula::Atom(..) => Prop::Var(index[f]),
        Formula::Not(a) => Prop::not(compile(a, index)),
        Formula::And(a, b) => Prop::and(vec![compile(a, index), compile(b, index)]),
        Formula::Or(a, b) => Prop::or(vec![compile(a, index), compile(b, index)]),
        Formula::Implies(a, b) => Prop::implies(compile(a, index), compile(b, index)),
        Formula::Iff(a, b) => Prop::iff(compile(a, index), compile(b, index)),
        Formula::Meta(_) | Formula::ForAll(..) | Formula::Exists(..) => {
            unreachable!("checked by validate")
        }
    }
}

fn validate(all: &[&Formula]) -> Result<(), OracleError> {
    check_closed(all)?;
    for f in all {
        if !f.is_quantifier_free() {
            return Err(OracleError::NotPropositional(f.to_string()));
        }
        let mut bad = false;
        f.visit(&mut |g| {
            if let Formula::Atom(Pred::Name(_), args) = g {
                bad |= args.iter().any(|t| !matches!(t, Term::Const(_)));
            }
        });
        if bad {
            return Err(OracleError::NotPropositional(f.to_string()));
        }
    }
    Ok(())
}

struct Compiled {
    atoms: Vec<Formula>,
    premises: Vec<Prop>,
    goal: Prop,
}

fn prepare(premises: &[Formula], goal: &Formula) -> Result<Compiled, OracleError> {
    let all: Vec<&Formula> = premises.iter().chain(std::iter::once(goal)).collect();
    validate(&all)?;
    let atoms = collect_atoms(&all);
    let index: BTreeMap<Formula, usize> =
        atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    Ok(Compiled {
        premises: premises.iter().map(|p| compile(p, &index)).collect(),
        goal: compile(goal, &index),
        atoms,
    })
}

fn valuation(atoms: &[Formula], value: impl Fn(usize) -> bool) -> Countermodel {
    Countermodel::Valuation {
        values: atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.to_string(), value(i)))
            .collect(),
    }
}

/// Enumerates all 2^n valuations in binary order, atom i being bit i of
/// the sorted atom list. The first falsifying valuation is returned.
pub(crate) fn truth_table_entails(
    premises: &[Formula],
    goal: &Formula,
    cap: usize,
) -> Result<EntailmentVerdict, OracleError> {
    let c = prepare(premises, goal)?;
    let n = c.atoms.len();
    if n > cap || n >= 63 {
        return Err(OracleError::AtomCap { atoms: n, cap });
    }
    for bits in 0..(1u64 << n) {
        if !c.goal.eval_bits(bits) && c.premises.iter().all(|p| p.eval_bits(bits)) {
            return Ok(EntailmentVerdict::refuted(
                valuation(&c.atoms, |i| bits >> i & 1 == 1),
                None,
            ));
        }
    }
    Ok(EntailmentVerdict::entailed(None))
}

/// Same question answered by DPLL search, with no atom cap.
pub(crate) fn search_entails(
    premises: &[Formula],
    goal: &Formula,
    budget: u64,
) -> Result<EntailmentVerdict, OracleError> {
    let c = prepare(premises, goal)?;
    let mut input = c.premises;
    input.push(Prop::not(c.goal));
    let mut budget = budget;
    Ok(match satisfiable(&input, c.atoms.len(), &mut budget) {
        SatOutcome::Unsat => EntailmentVerdict::entailed(None),
        SatOutcome::Sat(model) => EntailmentVerdict::refuted(valuation(&c.atoms, |i| model[i]), None),
        SatOutcome::Exhausted => EntailmentVerdict::undetermined(None),
    })
}

/// Evaluates a quantifier-free formula under a valuation keyed by atom text.
pub fn eval_valuation(f: &Formula, values: &BTreeMap<String, bool>) -> Option<bool> {
    Some(match f {
        Formula::Atom(..) => *values.get(&f.to_string())?,
        Formula::Not(a) => !eval_valuation(a, values)?,
        Formula::And(a, b) => eval_valuation(a, values)? && eval_valuation(b, values)?,
        Formula::Or(a, b) => eval_valuation(a, values)? || eval_valuation(b, values)?,
        Formula::Implies(a, b) => !eval_valuation(a, values)? || eval_valuation(b, values)?,
        Formula::Iff(a, b) => eval_valuation(a, values)? == eval_valuation(b, values)?,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::oracle::Status;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn fs(items: &[&str]) -> Vec<Formula> {
        items.iter().map(|s| f(s)).collect()
    }

    #[test]
    fn modus_ponens() {
        let v = truth_table_entails(&fs(&["p -> q", "p"]), &f("q"), 20).unwrap();
        assert_eq!(v.status, Status::Entailed);
    }

    #[test]
    fn affirming_the_consequent() {
        let v = truth_table_entails(&fs(&["p -> q", "q"]), &f("p"), 20).unwrap();
        assert_eq!(v.status, Status::NotEntailed);
        let Some(Countermodel::Valuation { values }) = v.counterexample else {
            panic!("valuation expected")
        };
        assert_eq!(values, BTreeMap::from([("p".into(), false), ("q".into(), true)]));
    }

    #[test]
    fn tautology_from_nothing() {
        assert!(truth_table_entails(&[], &f("p | ~p"), 20).unwrap().is_entailed());
    }

    #[test]
    fn atom_cap() {
        let premises: Vec<Formula> = (0..21).map(|i| Formula::prop(format!("a{i}"))).collect();
        assert_eq!(
            truth_table_entails(&premises, &f("b"), 20).unwrap_err(),
            OracleError::AtomCap { atoms: 22, cap: 20 }
        );
        assert!(search_entails(&premises, &f("a3"), 1000).unwrap().is_entailed());
    }

    #[test]
    fn rejects_quantifiers() {
        assert!(matches!(
            truth_table_entails(&fs(&["forall x. p(x)"]), &f("p(a)"), 20),
            Err(OracleError::NotPropositional(_))
        ));
    }

    #[test]
    fn ground_atoms_are_symbols() {
        let v = search_entails(&fs(&["wet(road) -> slow(cars)", "wet(road)"]), &f("slow(cars)"), 100)
            .unwrap();
        assert!(v.is_entailed());
    }

    #[test]
    fn search_counterexample_checks() {
        let premises = fs(&["p | q", "q -> r"]);
        let v = search_entails(&premises, &f("r"), 100).unwrap();
        let Some(Countermodel::Valuation { values }) = v.counterexample else {
            panic!()
        };
        for p in &premises {
            assert_eq!(eval_valuation(p, &values), Some(true));
        }
        assert_eq!(eval_valuation(&f("r"), &values), Some(false));
    }
}
