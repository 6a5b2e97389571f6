//! Substitution, capture-avoiding application and one-way schema matching.

use std::collections::{BTreeMap, BTreeSet};

use super::{DefaultRule, Formula, Pred, Term};

/// Bindings for schema placeholders and free variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    formulas: BTreeMap<String, Formula>,
    predicates: BTreeMap<String, String>,
    terms: BTreeMap<Term, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty() && self.predicates.is_empty() && self.terms.is_empty()
    }

    pub fn bind_formula(&mut self, meta: impl Into<String>, f: Formula) -> &mut Self {
        self.formulas.insert(meta.into(), f);
        self
    }

    pub fn bind_predicate(&mut self, meta: impl Into<String>, name: impl Into<String>) -> &mut Self {
        self.predicates.insert(meta.into(), name.into());
        self
    }

    /// Binds a constant placeholder (`Term::Meta`) or a free variable.
    pub fn bind_term(&mut self, key: Term, value: Term) -> &mut Self {
        self.terms.insert(key, value);
        self
    }

    pub fn formula(&self, meta: &str) -> Option<&Formula> {
        self.formulas.get(meta)
    }

    pub fn predicate(&self, meta: &str) -> Option<&str> {
        self.predicates.get(meta).map(String::as_str)
    }

    pub fn term(&self, key: &Term) -> Option<&Term> {
        self.terms.get(key)
    }

    pub fn formulas(&self) -> impl Iterator<Item = (&String, &Formula)> {
        self.formulas.iter()
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&String, &String)> {
        self.predicates.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &Term)> {
        self.terms.iter()
    }

    /// No key occurs in any bound value, so applying twice equals applying once.
    pub fn is_idempotent(&self) -> bool {
        let metas: BTreeSet<&str> = self.formulas.keys().map(String::as_str).collect();
        let preds: BTreeSet<&str> = self.predicates.keys().map(String::as_str).collect();
        let mut ok = true;
        for f in self.formulas.values() {
            f.visit(&mut |g| match g {
                Formula::Meta(m) if metas.contains(m.as_str()) => ok = false,
                Formula::Atom(p, args) => {
                    if let Pred::Meta(m) = p {
                        if preds.contains(m.as_str()) {
                            ok = false;
                        }
                    }
                    if args.iter().any(|t| self.terms.contains_key(t)) {
                        ok = false;
                    }
                }
                _ => {}
            });
        }
        ok && self.terms.values().all(|t| !self.terms.contains_key(t))
    }
}

/// Result of a traced substitution: the formula plus any binder renamings
/// made to avoid capture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Applied {
    pub formula: Formula,
    pub renamed: Vec<(String, String)>,
}

pub fn apply_substitution(f: &Formula, s: &Substitution) -> Formula {
    apply_substitution_traced(f, s).formula
}

pub fn apply_substitution_traced(f: &Formula, s: &Substitution) -> Applied {
    let mut renamed = Vec::new();
    let formula = apply(f, s, &mut Vec::new(), &mut renamed);
    Applied { formula, renamed }
}

fn apply_term(t: &Term, s: &Substitution, bound: &[String]) -> Term {
    match t {
        Term::Var(v) if bound.contains(v) => t.clone(),
        _ => s.terms.get(t).cloned().unwrap_or_else(|| t.clone()),
    }
}

/// Free variables the substitution may introduce inside `body`.
fn introduced_vars(body: &Formula, s: &Substitution, bound: &[String]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut local = bound.to_vec();
    collect_introduced(body, s, &mut local, &mut out);
    out
}

fn collect_introduced(f: &Formula, s: &Substitution, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match f {
        Formula::Meta(m) => {
            if let Some(v) = s.formulas.get(m) {
                out.extend(v.free_vars());
            }
        }
        Formula::Atom(_, args) => {
            for t in args {
                let keyed = match t {
                    Term::Var(v) => !bound.contains(v),
                    _ => true,
                };
                if keyed {
                    if let Some(Term::Var(v)) = s.terms.get(t) {
                        out.insert(v.clone());
                    }
                }
            }
        }
        Formula::Not(a) => collect_introduced(a, s, bound, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_introduced(a, s, bound, out);
            collect_introduced(b, s, bound, out);
        }
        Formula::ForAll(v, body) | Formula::Exists(v, body) => {
            bound.push(v.clone());
            collect_introduced(body, s, bound, out);
            bound.pop();
        }
    }
}

fn rename_bound(f: &Formula, from: &str, to: &str) -> Formula {
    match f {
        Formula::Atom(p, args) => Formula::Atom(
            p.clone(),
            args.iter()
                .map(|t| match t {
                    Term::Var(v) if v == from => Term::Var(to.to_string()),
                    other => other.clone(),
                })
                .collect(),
        ),
        Formula::Meta(_) => f.clone(),
        Formula::Not(a) => Formula::not(rename_bound(a, from, to)),
        Formula::And(a, b) => Formula::and(rename_bound(a, from, to), rename_bound(b, from, to)),
        Formula::Or(a, b) => Formula::or(rename_bound(a, from, to), rename_bound(b, from, to)),
        Formula::Implies(a, b) => {
            Formula::implies(rename_bound(a, from, to), rename_bound(b, from, to))
        }
        Formula::Iff(a, b) => Formula::iff(rename_bound(a, from, to), rename_bound(b, from, to)),
        Formula::ForAll(v, _) | Formula::Exists(v, _) if v == from => f.clone(),
        Formula::ForAll(v, body) => Formula::forall(v.clone(), rename_bound(body, from, to)),
        Formula::Exists(v, body) => Formula::exists(v.clone(), rename_bound(body, from, to)),
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { base } else { stem };
    (1..)
        .map(|k| format!("{stem}{k}"))
        .find(|cand| !avoid.contains(cand))
        .expect("infinite supply of names")
}

fn apply(
    f: &Formula,
    s: &Substitution,
    bound: &mut Vec<String>,
    renamed: &mut Vec<(String, String)>,
) -> Formula {
    match f {
        Formula::Meta(m) => s.formulas.get(m).cloned().unwrap_or_else(|| f.clone()),
        Formula::Atom(p, args) => {
            let pred = match p {
                Pred::Meta(m) => s
                    .predicates
                    .get(m)
                    .map(|n| Pred::Name(n.clone()))
                    .unwrap_or_else(|| p.clone()),
                Pred::Name(_) => p.clone(),
            };
            Formula::Atom(pred, args.iter().map(|t| apply_term(t, s, bound)).collect())
        }
        Formula::Not(a) => Formula::not(apply(a, s, bound, renamed)),
        Formula::And(a, b) => Formula::and(apply(a, s, bound, renamed), apply(b, s, bound, renamed)),
        Formula::Or(a, b) => Formula::or(apply(a, s, bound, renamed), apply(b, s, bound, renamed)),
        Formula::Implies(a, b) => {
            Formula::implies(apply(a, s, bound, renamed), apply(b, s, bound, renamed))
        }
        Formula::Iff(a, b) => Formula::iff(apply(a, s, bound, renamed), apply(b, s, bound, renamed)),
        Formula::ForAll(v, body) | Formula::Exists(v, body) => {
            let introduced = introduced_vars(body, s, bound);
            let (var, body) = if introduced.contains(v) {
                let mut avoid = introduced;
                avoid.extend(body.variable_names());
                avoid.extend(bound.iter().cloned());
                let fresh = fresh_name(v, &avoid);
                renamed.push((v.clone(), fresh.clone()));
                let body = rename_bound(body, v, &fresh);
                (fresh, body)
            } else {
                (v.clone(), (**body).clone())
            };
            bound.push(var.clone());
            let inner = apply(&body, s, bound, renamed);
            bound.pop();
            if matches!(f, Formula::ForAll(..)) {
                Formula::forall(var, inner)
            } else {
                Formula::exists(var, inner)
            }
        }
    }
}

/// One-way syntactic match of `schema` against `instance`.
pub fn match_schema(schema: &Formula, instance: &Formula) -> Option<Substitution> {
    match_schema_with(schema, instance, &Substitution::new())
}

/// Extends an existing substitution; used to match several premises jointly.
pub fn match_schema_with(
    schema: &Formula,
    instance: &Formula,
    base: &Substitution,
) -> Option<Substitution> {
    let mut s = base.clone();
    let mut m = Matcher {
        s: &mut s,
        pat_bound: Vec::new(),
        inst_bound: Vec::new(),
    };
    if m.formula(schema, instance) {
        Some(s)
    } else {
        None
    }
}

/// Matches a default template against a concrete default, ignoring priority.
pub fn match_default(
    schema: &DefaultRule,
    instance: &DefaultRule,
    base: &Substitution,
) -> Option<Substitution> {
    if schema.justifications.len() != instance.justifications.len() {
        return None;
    }
    let mut s = match_schema_with(&schema.prerequisite, &instance.prerequisite, base)?;
    for (a, b) in schema.justifications.iter().zip(&instance.justifications) {
        s = match_schema_with(a, b, &s)?;
    }
    match_schema_with(&schema.consequent, &instance.consequent, &s)
}

struct Matcher<'a> {
    s: &'a mut Substitution,
    pat_bound: Vec<String>,
    inst_bound: Vec<String>,
}

impl Matcher<'_> {
    fn term(&mut self, pat: &Term, inst: &Term) -> bool {
        match pat {
            Term::Var(x) => {
                if let Some(depth) = self.pat_bound.iter().rposition(|b| b == x) {
                    return matches!(inst, Term::Var(y) if self.inst_bound.iter().rposition(|b| b == y) == Some(depth));
                }
                // Free pattern variable: consistent placeholder for any term
                // not bound on the instance side.
                if let Term::Var(y) = inst {
                    if self.inst_bound.contains(y) {
                        return false;
                    }
                }
                self.bind_term(pat, inst)
            }
            Term::Const(c) => matches!(inst, Term::Const(d) if c == d),
            Term::Meta(_) => {
                if !matches!(inst, Term::Const(_)) {
                    return false;
                }
                self.bind_term(pat, inst)
            }
        }
    }

    fn bind_term(&mut self, pat: &Term, inst: &Term) -> bool {
        match self.s.terms.get(pat) {
            Some(existing) => existing == inst,
            None => {
                self.s.terms.insert(pat.clone(), inst.clone());
                true
            }
        }
    }

    fn formula(&mut self, pat: &Formula, inst: &Formula) -> bool {
        match (pat, inst) {
            (Formula::Meta(m), _) => {
                if !self.inst_bound.is_empty()
                    && inst.free_vars().iter().any(|v| self.inst_bound.contains(v))
                {
                    return false;
                }
                match self.s.formulas.get(m) {
                    Some(existing) => existing == inst,
                    None => {
                        self.s.formulas.insert(m.clone(), inst.clone());
                        true
                    }
                }
            }
            (Formula::Atom(pp, pargs), Formula::Atom(ip, iargs)) => {
                if pargs.len() != iargs.len() {
                    return false;
                }
                let pred_ok = match (pp, ip) {
                    (Pred::Name(a), Pred::Name(b)) => a == b,
                    (Pred::Meta(m), Pred::Name(b)) => match self.s.predicates.get(m) {
                        Some(existing) => existing == b,
                        None => {
                            self.s.predicates.insert(m.clone(), b.clone());
                            true
                        }
                    },
                    _ => false,
                };
                pred_ok && pargs.iter().zip(iargs).all(|(a, b)| self.term(a, b))
            }
            (Formula::Not(a), Formula::Not(b)) => self.formula(a, b),
            (Formula::And(a1, a2), Formula::And(b1, b2))
            | (Formula::Or(a1, a2), Formula::Or(b1, b2))
            | (Formula::Implies(a1, a2), Formula::Implies(b1, b2))
            | (Formula::Iff(a1, a2), Formula::Iff(b1, b2)) => {
                self.formula(a1, b1) && self.formula(a2, b2)
            }
            (Formula::ForAll(x, a), Formula::ForAll(y, b))
            | (Formula::Exists(x, a), Formula::Exists(y, b)) => {
                self.pat_bound.push(x.clone());
                self.inst_bound.push(y.clone());
                let ok = self.formula(a, b);
                self.pat_bound.pop();
                self.inst_bound.pop();
                ok
            }
            _ => false,
        }
    }
}

/// Structural equality up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    fn go(a: &Formula, b: &Formula, la: &mut Vec<String>, lb: &mut Vec<String>) -> bool {
        match (a, b) {
            (Formula::Meta(x), Formula::Meta(y)) => x == y,
            (Formula::Atom(p, xs), Formula::Atom(q, ys)) => {
                p == q
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(s, t)| match (s, t) {
                        (Term::Var(u), Term::Var(v)) => {
                            let du = la.iter().rposition(|n| n == u);
                            let dv = lb.iter().rposition(|n| n == v);
                            match (du, dv) {
                                (None, None) => u == v,
                                (d1, d2) => d1 == d2,
                            }
                        }
                        (s, t) => s == t,
                    })
            }
            (Formula::Not(x), Formula::Not(y)) => go(x, y, la, lb),
            (Formula::And(a1, a2), Formula::And(b1, b2))
            | (Formula::Or(a1, a2), Formula::Or(b1, b2))
            | (Formula::Implies(a1, a2), Formula::Implies(b1, b2))
            | (Formula::Iff(a1, a2), Formula::Iff(b1, b2)) => {
                go(a1, b1, la, lb) && go(a2, b2, la, lb)
            }
            (Formula::ForAll(x, p), Formula::ForAll(y, q))
            | (Formula::Exists(x, p), Formula::Exists(y, q)) => {
                la.push(x.clone());
                lb.push(y.clone());
                let ok = go(p, q, la, lb);
                la.pop();
                lb.pop();
                ok
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new(), &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, parse_open_formula};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn implication_schema_matches_atoms() {
        let s = match_schema(&f("PHI -> PSI"), &f("rain -> wet")).unwrap();
        assert_eq!(s.formula("PHI"), Some(&f("rain")));
        assert_eq!(s.formula("PSI"), Some(&f("wet")));
    }

    #[test]
    fn head_connective_mismatch() {
        assert!(match_schema(&f("PHI -> PSI"), &f("rain & wet")).is_none());
    }

    #[test]
    fn metas_bind_compound_formulas() {
        let s = match_schema(&f("PHI -> PSI"), &f("(a | b) -> (c & d)")).unwrap();
        assert_eq!(s.formula("PHI"), Some(&f("a | b")));
        assert_eq!(s.formula("PSI"), Some(&f("c & d")));
    }

    #[test]
    fn repeated_meta_must_agree() {
        assert!(match_schema(&f("PHI & PHI"), &f("p & q")).is_none());
        assert!(match_schema(&f("PHI & PHI"), &f("p & p")).is_some());
    }

    #[test]
    fn predicate_and_constant_placeholders() {
        let schema = f("forall x. ($p(x) -> $q(x))");
        let s = match_schema(&schema, &f("forall y. (bird(y) -> flies(y))")).unwrap();
        assert_eq!(s.predicate("p"), Some("bird"));
        assert_eq!(s.predicate("q"), Some("flies"));
        assert!(alpha_eq(
            &apply_substitution(&schema, &s),
            &f("forall y. (bird(y) -> flies(y))")
        ));
        // a constant placeholder never captures a bound variable
        assert!(match_schema(&f("forall x. $p($a)"), &f("forall x. p(x)")).is_none());
    }

    #[test]
    fn meta_cannot_capture_instance_bound_variable() {
        assert!(match_schema(&f("forall x. PHI"), &f("forall x. p(x)")).is_none());
        assert!(match_schema(&f("forall x. PHI"), &f("forall x. q")).is_some());
    }

    #[test]
    fn apply_plain() {
        let mut s = Substitution::new();
        s.bind_formula("PHI", f("p")).bind_formula("PSI", f("q"));
        assert_eq!(apply_substitution(&f("PHI -> PSI"), &s), f("p -> q"));
        assert_eq!(
            apply_substitution(&f("forall x. p(x)"), &Substitution::new()),
            f("forall x. p(x)")
        );
    }

    #[test]
    fn apply_avoids_capture() {
        let mut s = Substitution::new();
        s.bind_formula("PHI", parse_open_formula("q(x)").unwrap());
        let out = apply_substitution_traced(&f("forall x. PHI"), &s);
        assert_eq!(out.formula, parse_open_formula("forall x1. q(x)").unwrap());
        assert_eq!(out.renamed, vec![("x".to_string(), "x1".to_string())]);
    }

    #[test]
    fn free_variable_substitution_respects_binders() {
        let mut s = Substitution::new();
        s.bind_term(Term::var("x"), Term::constant("a"));
        let g = parse_open_formula("p(x) & forall x. q(x)").unwrap();
        assert_eq!(apply_substitution(&g, &s), f("p(a) & forall x. q(x)"));
    }

    #[test]
    fn idempotence_check() {
        let mut s = Substitution::new();
        s.bind_formula("PHI", f("p"));
        assert!(s.is_idempotent());
        s.bind_formula("PSI", f("PHI & q"));
        assert!(!s.is_idempotent());
    }
}
