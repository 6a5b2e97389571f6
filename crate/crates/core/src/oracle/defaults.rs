//! Reiter extensions of default theories with finitely many constants.
//!
//! Defaults are grounded over the constants and extensions are enumerated
//! as the successful closed processes of the theory: sequences of default
//! applications whose prerequisites are derivable and whose justifications
//! stay consistent, ending when nothing more applies. With priorities,
//! a default may only fire when no applicable default has a strictly
//! smaller priority value.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::formula::{apply_substitution, DefaultRule, Formula, Substitution, Term};

use super::ground::{GroundAtom, Grounder};
use super::sat::{satisfiable, AtomTable, Prop, SatOutcome};
use super::{check_closed, Countermodel, EntailmentVerdict, OracleConfig, OracleError};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultTheory {
    pub facts: Vec<Formula>,
    pub hard_rules: Vec<Formula>,
    pub defaults: Vec<DefaultRule>,
}

impl DefaultTheory {
    /// Quantifier-free formulas become facts, the rest hard rules.
    pub fn split(formulas: &[Formula], defaults: &[DefaultRule]) -> Self {
        let (facts, hard_rules) = formulas.iter().cloned().partition(Formula::is_quantifier_free);
        DefaultTheory {
            facts,
            hard_rules,
            defaults: defaults.to_vec(),
        }
    }

    fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.facts.iter().chain(&self.hard_rules)
    }
}

/// One extension, described by its generating defaults and the ground
/// literals it decides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub generating_defaults: Vec<DefaultRule>,
    /// Facts, hard rules and the consequents of the generating defaults;
    /// the extension is the deductive closure of this list.
    pub base: Vec<Formula>,
    /// Ground literals over the theory's atoms that the extension contains.
    pub literals: BTreeSet<Formula>,
}

impl Extension {
    pub fn contains_literal(&self, f: &Formula) -> bool {
        self.literals.contains(f)
    }
}

struct GroundDefault {
    rule: DefaultRule,
    pre: Prop,
    justs: Vec<Prop>,
    cons: Prop,
}

struct Grounded {
    elements: BTreeMap<String, usize>,
    atoms: AtomTable<GroundAtom>,
    world: Vec<Prop>,
    defaults: Vec<GroundDefault>,
}

impl Grounded {
    fn ground(&mut self, f: &Formula) -> Prop {
        Grounder {
            domain: self.elements.len(),
            constants: &self.elements,
            atoms: &mut self.atoms,
        }
        .ground(f)
    }
}

struct Checker {
    budget: u64,
}

impl Checker {
    fn sat(&mut self, props: &[Prop], atoms: usize) -> Result<bool, OracleError> {
        let mut budget = self.budget;
        match satisfiable(props, atoms, &mut budget) {
            SatOutcome::Sat(_) => Ok(true),
            SatOutcome::Unsat => Ok(false),
            SatOutcome::Exhausted => Err(OracleError::BudgetExhausted),
        }
    }

    fn entails(&mut self, base: &[Prop], goal: &Prop, atoms: usize) -> Result<bool, OracleError> {
        let mut input = base.to_vec();
        input.push(Prop::not(goal.clone()));
        Ok(!self.sat(&input, atoms)?)
    }

    fn consistent_with(&mut self, base: &[Prop], extra: &Prop, atoms: usize) -> Result<bool, OracleError> {
        let mut input = base.to_vec();
        input.push(extra.clone());
        self.sat(&input, atoms)
    }
}

fn quantifier_count(f: &Formula) -> u32 {
    let mut n = 0;
    f.visit(&mut |g| {
        if matches!(g, Formula::ForAll(..) | Formula::Exists(..)) {
            n += 1;
        }
    });
    n
}

fn prepare(
    theory: &DefaultTheory,
    constants: &[String],
    extra: Option<&Formula>,
    config: &OracleConfig,
) -> Result<Grounded, OracleError> {
    let formulas: Vec<&Formula> = theory.formulas().chain(extra).collect();
    check_closed(&formulas)?;
    for d in &theory.defaults {
        if d.parts().any(Formula::has_metas) {
            return Err(OracleError::Metavariables(d.to_string()));
        }
    }
    let mut names: BTreeSet<String> = constants.iter().cloned().collect();
    names.extend(formulas.iter().flat_map(|f| f.constants()));
    names.extend(theory.defaults.iter().flat_map(|d| d.constants()));
    let elements: BTreeMap<String, usize> =
        names.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let k = elements.len();

    let mut instances = formulas.len();
    for f in theory.hard_rules.iter() {
        instances = instances.saturating_add(k.saturating_pow(quantifier_count(f)));
    }
    let mut ground_rules = Vec::new();
    for d in &theory.defaults {
        let vars: Vec<String> = d.free_vars().into_iter().collect();
        let count = k.saturating_pow(vars.len() as u32);
        instances = instances.saturating_add(count);
        if instances > config.max_ground_instances {
            return Err(OracleError::GroundCap {
                instances,
                cap: config.max_ground_instances,
            });
        }
        for tuple in itertools::Itertools::multi_cartesian_product(
            vars.iter().map(|_| names.iter().cloned()),
        ) {
            let mut s = Substitution::new();
            for (v, c) in vars.iter().zip(&tuple) {
                s.bind_term(Term::Var(v.clone()), Term::Const(c.clone()));
            }
            ground_rules.push(DefaultRule {
                prerequisite: apply_substitution(&d.prerequisite, &s),
                justifications: d.justifications.iter().map(|j| apply_substitution(j, &s)).collect(),
                consequent: apply_substitution(&d.consequent, &s),
                priority: d.priority,
            });
        }
        if vars.is_empty() && ground_rules.last() != Some(d) {
            // multi_cartesian_product of nothing yields nothing
            ground_rules.push(d.clone());
        }
    }
    if instances > config.max_ground_instances {
        return Err(OracleError::GroundCap {
            instances,
            cap: config.max_ground_instances,
        });
    }

    let mut g = Grounded {
        elements,
        atoms: AtomTable::new(),
        world: Vec::new(),
        defaults: Vec::new(),
    };
    for f in theory.formulas() {
        let p = g.ground(f);
        g.world.push(p);
    }
    for rule in ground_rules {
        let pre = g.ground(&rule.prerequisite);
        let justs = rule.justifications.iter().map(|j| g.ground(j)).collect();
        let cons = g.ground(&rule.consequent);
        g.defaults.push(GroundDefault {
            rule,
            pre,
            justs,
            cons,
        });
    }
    Ok(g)
}

/// A ground default over the local atoms of one component.
struct LocalDefault {
    global: usize,
    priority: u32,
    pre: Prop,
    justs: Vec<Prop>,
    cons: Prop,
}

/// Defaults and world formulas sharing no atoms with the rest of the
/// theory. Extensions of a consistent theory are exactly the unions of one
/// extension per component, so each is searched on its own.
struct Component {
    atoms: Vec<usize>,
    world: Vec<Prop>,
    defaults: Vec<LocalDefault>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn components(g: &Grounded) -> Vec<Component> {
    let n = g.atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let join = |vars: &[usize], parent: &mut Vec<usize>| {
        for w in vars.windows(2) {
            let (a, b) = (find(parent, w[0]), find(parent, w[1]));
            parent[a] = b;
        }
    };
    let mut world: Vec<&Prop> = Vec::new();
    for p in &g.world {
        match p {
            Prop::And(items) => world.extend(items),
            other => world.push(other),
        }
    }
    let mut scratch = Vec::new();
    for p in &world {
        scratch.clear();
        p.vars(&mut scratch);
        join(&scratch, &mut parent);
    }
    for d in &g.defaults {
        scratch.clear();
        d.pre.vars(&mut scratch);
        d.cons.vars(&mut scratch);
        d.justs.iter().for_each(|j| j.vars(&mut scratch));
        join(&scratch, &mut parent);
    }
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out: Vec<Component> = Vec::new();
    let mut local = vec![0usize; n];
    let mut owner = vec![0usize; n];
    for v in 0..n {
        let root = find(&mut parent, v);
        let c = *index.entry(root).or_insert_with(|| {
            out.push(Component {
                atoms: Vec::new(),
                world: Vec::new(),
                defaults: Vec::new(),
            });
            out.len() - 1
        });
        local[v] = out[c].atoms.len();
        owner[v] = c;
        out[c].atoms.push(v);
    }
    let to_local = |v: usize| local[v];
    let place = |p: &Prop| -> Option<usize> {
        let mut vs = Vec::new();
        p.vars(&mut vs);
        vs.first().map(|&v| owner[v])
    };
    let mut trivial_world: Vec<Prop> = Vec::new();
    for p in world {
        match place(p) {
            Some(c) => out[c].world.push(p.rename(&to_local)),
            None => trivial_world.push(p.clone()),
        }
    }
    let mut trivial_defaults = Vec::new();
    for (i, d) in g.defaults.iter().enumerate() {
        let mut vs = Vec::new();
        d.pre.vars(&mut vs);
        d.cons.vars(&mut vs);
        d.justs.iter().for_each(|j| j.vars(&mut vs));
        let local_default = LocalDefault {
            global: i,
            priority: d.rule.priority,
            pre: d.pre.rename(&to_local),
            justs: d.justs.iter().map(|j| j.rename(&to_local)).collect(),
            cons: d.cons.rename(&to_local),
        };
        match vs.first() {
            Some(&v) => out[owner[v]].defaults.push(local_default),
            None => trivial_defaults.push(local_default),
        }
    }
    if !trivial_world.is_empty() || !trivial_defaults.is_empty() {
        out.push(Component {
            atoms: Vec::new(),
            world: trivial_world,
            defaults: trivial_defaults,
        });
    }
    out
}

/// Applied-default sets (global indices, sorted) of every successful
/// closed process of one component, merged up to equivalence.
fn search_component(c: &Component, config: &OracleConfig) -> Result<Vec<Vec<usize>>, OracleError> {
    let atoms = c.atoms.len();
    let mut checker = Checker {
        budget: config.search_budget,
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    let mut nodes: u64 = 0;
    while let Some(applied) = stack.pop() {
        if !seen.insert(applied.clone()) {
            continue;
        }
        nodes += 1;
        if nodes > config.search_budget {
            return Err(OracleError::BudgetExhausted);
        }
        let mut base = c.world.clone();
        base.extend(applied.iter().map(|&i| c.defaults[i].cons.clone()));
        // A process fails once a used justification is refuted; since the
        // base only grows, so do all its continuations.
        let mut failed = false;
        'outer: for &i in &applied {
            for j in &c.defaults[i].justs {
                if !checker.consistent_with(&base, j, atoms)? {
                    failed = true;
                    break 'outer;
                }
            }
        }
        if failed {
            continue;
        }
        let mut applicable = Vec::new();
        for (i, d) in c.defaults.iter().enumerate() {
            if applied.contains(&i) || !checker.entails(&base, &d.pre, atoms)? {
                continue;
            }
            let mut ok = true;
            for j in &d.justs {
                if !checker.consistent_with(&base, j, atoms)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                applicable.push(i);
            }
        }
        if applicable.is_empty() {
            found.push(applied);
            continue;
        }
        let best = applicable
            .iter()
            .map(|&i| c.defaults[i].priority)
            .min()
            .expect("non-empty");
        for &i in applicable.iter().rev() {
            if c.defaults[i].priority == best {
                let mut next = applied.clone();
                next.push(i);
                next.sort_unstable();
                stack.push(next);
            }
        }
    }
    // Distinct generating sets can close to the same theory.
    found.sort();
    found.dedup();
    let base = |s: &[usize]| {
        let mut b = c.world.clone();
        b.extend(s.iter().map(|&i| c.defaults[i].cons.clone()));
        b
    };
    let mut unique: Vec<Vec<usize>> = Vec::new();
    for set in found {
        let mine = base(&set);
        let mut duplicate = false;
        for other in &unique {
            let theirs = base(other);
            let mut same = true;
            for p in &theirs {
                same &= checker.entails(&mine, p, atoms)?;
            }
            for p in &mine {
                same &= checker.entails(&theirs, p, atoms)?;
            }
            if same {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            unique.push(set);
        }
    }
    Ok(unique
        .into_iter()
        .map(|set| {
            let mut global: Vec<usize> = set.iter().map(|&i| c.defaults[i].global).collect();
            global.sort_unstable();
            global
        })
        .collect())
}

/// Per-component extension lists, or `None` when the world itself is
/// inconsistent (its only extension is then the empty generating set).
fn component_extensions(
    g: &Grounded,
    config: &OracleConfig,
) -> Result<Option<Vec<(Component, Vec<Vec<usize>>)>>, OracleError> {
    let mut checker = Checker {
        budget: config.search_budget,
    };
    if !checker.sat(&g.world, g.atoms.len())? {
        return Ok(None);
    }
    let mut out = Vec::new();
    for c in components(g) {
        let sets = search_component(&c, config)?;
        out.push((c, sets));
    }
    Ok(Some(out))
}

/// Every combination picking one set per list, unioned.
fn product(lists: &[&Vec<Vec<usize>>], cap: u64) -> Result<Vec<Vec<usize>>, OracleError> {
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for list in lists {
        if (acc.len() as u64).saturating_mul(list.len() as u64) > cap {
            return Err(OracleError::BudgetExhausted);
        }
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for a in &acc {
            for s in *list {
                let mut u = a.clone();
                u.extend(s);
                next.push(u);
            }
        }
        acc = next;
    }
    for s in &mut acc {
        s.sort_unstable();
    }
    Ok(acc)
}

/// Generating sets of all extensions.
fn search(g: &Grounded, config: &OracleConfig) -> Result<Vec<Vec<usize>>, OracleError> {
    let Some(parts) = component_extensions(g, config)? else {
        return Ok(vec![Vec::new()]);
    };
    let lists: Vec<&Vec<Vec<usize>>> = parts.iter().map(|(_, s)| s).collect();
    product(&lists, config.search_budget)
}

fn describe(
    g: &Grounded,
    theory: &DefaultTheory,
    set: &[usize],
    config: &OracleConfig,
) -> Result<Extension, OracleError> {
    let atoms = g.atoms.len();
    let mut checker = Checker {
        budget: config.search_budget,
    };
    let mut base = g.world.clone();
    base.extend(set.iter().map(|&i| g.defaults[i].cons.clone()));
    let names: Vec<&String> = g.elements.keys().collect();
    let mut literals = BTreeSet::new();
    for (i, (pred, tuple)) in g.atoms.keys().iter().enumerate() {
        let atom = Formula::pred(
            pred.clone(),
            tuple.iter().map(|&e| Term::Const(names[e].clone())).collect(),
        );
        let atom = if tuple.is_empty() { Formula::prop(pred.clone()) } else { atom };
        if checker.entails(&base, &Prop::Var(i), atoms)? {
            literals.insert(atom);
        } else if checker.entails(&base, &Prop::not(Prop::Var(i)), atoms)? {
            literals.insert(Formula::not(atom));
        }
    }
    let generating: Vec<DefaultRule> = set.iter().map(|&i| g.defaults[i].rule.clone()).collect();
    let mut formulas: Vec<Formula> = theory.formulas().cloned().collect();
    formulas.extend(generating.iter().map(|d| d.consequent.clone()));
    Ok(Extension {
        generating_defaults: generating,
        base: formulas,
        literals,
    })
}

pub(crate) fn extensions(
    theory: &DefaultTheory,
    constants: &[String],
    config: &OracleConfig,
) -> Result<Vec<Extension>, OracleError> {
    let g = prepare(theory, constants, None, config)?;
    search(&g, config)?
        .iter()
        .map(|set| describe(&g, theory, set, config))
        .collect()
}

pub(crate) fn skeptical(
    theory: &DefaultTheory,
    constants: &[String],
    goal: &Formula,
    config: &OracleConfig,
) -> Result<EntailmentVerdict, OracleError> {
    let mut g = prepare(theory, constants, Some(goal), config)?;
    let goal_prop = g.ground(goal);
    let atoms = g.atoms.len();
    let mut checker = Checker {
        budget: config.search_budget,
    };
    let Some(parts) = component_extensions(&g, config)? else {
        return Ok(EntailmentVerdict::entailed(None));
    };
    if parts.iter().any(|(_, sets)| sets.is_empty()) {
        return Ok(EntailmentVerdict::undetermined(None));
    }
    // Only components sharing atoms with the goal can affect it.
    let mut goal_atoms = Vec::new();
    goal_prop.vars(&mut goal_atoms);
    let touched: Vec<usize> = (0..parts.len())
        .filter(|&i| parts[i].0.atoms.iter().any(|a| goal_atoms.contains(a)))
        .collect();
    let lists: Vec<&Vec<Vec<usize>>> = touched.iter().map(|&i| &parts[i].1).collect();
    let mut world: Vec<Prop> = Vec::new();
    for &i in &touched {
        let atoms_of = &parts[i].0.atoms;
        world.extend(parts[i].0.world.iter().map(|p| p.rename(&|v| atoms_of[v])));
    }
    for set in product(&lists, config.search_budget)? {
        let mut base = world.clone();
        base.extend(set.iter().map(|&i| g.defaults[i].cons.clone()));
        if !checker.entails(&base, &goal_prop, atoms)? {
            let mut full = set.clone();
            for (i, (_, sets)) in parts.iter().enumerate() {
                if !touched.contains(&i) {
                    full.extend(&sets[0]);
                }
            }
            full.sort_unstable();
            let ext = describe(&g, theory, &full, config)?;
            return Ok(EntailmentVerdict::refuted(Countermodel::Extension(ext), None));
        }
    }
    Ok(EntailmentVerdict::entailed(None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_default, parse_formula};
    use crate::oracle::{Oracle, Status};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn theory(facts: &[&str], hard: &[&str], defaults: &[&str]) -> DefaultTheory {
        DefaultTheory {
            facts: facts.iter().map(|s| f(s)).collect(),
            hard_rules: hard.iter().map(|s| f(s)).collect(),
            defaults: defaults.iter().map(|s| parse_default(s).unwrap()).collect(),
        }
    }

    fn consts(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn unblocked_default_fires() {
        let t = theory(&["bird(a)"], &[], &["bird(x) : flies(x) / flies(x)"]);
        let exts = Oracle::default().default_extensions(&t, &consts(&["a"])).unwrap();
        assert_eq!(exts.len(), 1);
        assert!(exts[0].contains_literal(&f("flies(a)")));
    }

    #[test]
    fn exception_blocks_default() {
        let t = theory(
            &["bird(a)", "penguin(a)"],
            &["forall x. (penguin(x) -> ~flies(x))"],
            &["bird(x) : flies(x) / flies(x)"],
        );
        let exts = Oracle::default().default_extensions(&t, &consts(&["a"])).unwrap();
        assert_eq!(exts.len(), 1);
        assert!(!exts[0].contains_literal(&f("flies(a)")));
        assert!(exts[0].contains_literal(&f("~flies(a)")));
    }

    #[test]
    fn conflicting_defaults_split() {
        let t = theory(
            &["quaker(nixon)", "republican(nixon)"],
            &[],
            &[
                "quaker(x) : pacifist(x) / pacifist(x)",
                "republican(x) : ~pacifist(x) / ~pacifist(x)",
            ],
        );
        let o = Oracle::default();
        assert_eq!(o.default_extensions(&t, &[]).unwrap().len(), 2);
        let v = o.default_entails(&t, &[], &f("pacifist(nixon)")).unwrap();
        assert_eq!(v.status, Status::NotEntailed);
        assert!(matches!(v.counterexample, Some(Countermodel::Extension(_))));
    }

    #[test]
    fn priority_picks_one() {
        let t = theory(
            &["quaker(nixon)", "republican(nixon)"],
            &[],
            &[
                "quaker(x) : pacifist(x) / pacifist(x) @ 1",
                "republican(x) : ~pacifist(x) / ~pacifist(x) @ 0",
            ],
        );
        let exts = Oracle::default().default_extensions(&t, &[]).unwrap();
        assert_eq!(exts.len(), 1);
        assert!(exts[0].contains_literal(&f("~pacifist(nixon)")));
    }

    #[test]
    fn extensions_contain_facts_and_respect_rules() {
        let t = theory(
            &["p(a)", "s(b)"],
            &["forall x. (s(x) -> p(x))"],
            &["p(x) : q(x) / q(x)"],
        );
        let exts = Oracle::default().default_extensions(&t, &[]).unwrap();
        assert_eq!(exts.len(), 1);
        for lit in ["p(a)", "s(b)", "p(b)", "q(a)", "q(b)"] {
            assert!(exts[0].contains_literal(&f(lit)), "{lit}");
        }
    }

    #[test]
    fn ground_cap() {
        let t = theory(&[], &[], &["p(x, y, z) : q(x) / q(x)"]);
        let names: Vec<String> = (0..11).map(|i| format!("c{i}")).collect();
        assert!(matches!(
            Oracle::default().default_extensions(&t, &names),
            Err(OracleError::GroundCap { .. })
        ));
    }

    #[test]
    fn inconsistent_world_has_one_extension() {
        let t = theory(&["p", "~p"], &[], &["p : q / q"]);
        assert_eq!(Oracle::default().default_extensions(&t, &[]).unwrap().len(), 1);
    }
}
