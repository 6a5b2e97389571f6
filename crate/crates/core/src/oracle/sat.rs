//! Ground propositional formulas, a Tseitin encoder and a DPLL search.
//!
//! This is the exhaustive search behind the finite-model and default-logic
//! oracles: it covers every assignment of the ground atoms, discarding a
//! region only when propagation or a learnt clause proves it holds no
//! model.

use std::collections::BTreeMap;

/// Ground formula over numbered atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Prop {
    Const(bool),
    Var(usize),
    Not(Box<Prop>),
    And(Vec<Prop>),
    Or(Vec<Prop>),
    Iff(Box<Prop>, Box<Prop>),
}

impl Prop {
    pub(crate) fn not(p: Prop) -> Prop {
        match p {
            Prop::Const(b) => Prop::Const(!b),
            Prop::Not(inner) => *inner,
            other => Prop::Not(Box::new(other)),
        }
    }

    pub(crate) fn and(items: Vec<Prop>) -> Prop {
        let mut out = Vec::with_capacity(items.len());
        for p in items {
            match p {
                Prop::Const(true) => {}
                Prop::Const(false) => return Prop::Const(false),
                Prop::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Prop::Const(true),
            1 => out.pop().unwrap(),
            _ => Prop::And(out),
        }
    }

    pub(crate) fn or(items: Vec<Prop>) -> Prop {
        let mut out = Vec::with_capacity(items.len());
        for p in items {
            match p {
                Prop::Const(false) => {}
                Prop::Const(true) => return Prop::Const(true),
                Prop::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Prop::Const(false),
            1 => out.pop().unwrap(),
            _ => Prop::Or(out),
        }
    }

    pub(crate) fn implies(a: Prop, b: Prop) -> Prop {
        Prop::or(vec![Prop::not(a), b])
    }

    /// Indices of the variables occurring in the formula.
    pub(crate) fn vars(&self, out: &mut Vec<usize>) {
        match self {
            Prop::Const(_) => {}
            Prop::Var(v) => out.push(*v),
            Prop::Not(a) => a.vars(out),
            Prop::And(items) | Prop::Or(items) => items.iter().for_each(|p| p.vars(out)),
            Prop::Iff(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// The formula with each variable `v` renamed to `map(v)`.
    pub(crate) fn rename(&self, map: &impl Fn(usize) -> usize) -> Prop {
        match self {
            Prop::Const(b) => Prop::Const(*b),
            Prop::Var(v) => Prop::Var(map(*v)),
            Prop::Not(a) => Prop::Not(Box::new(a.rename(map))),
            Prop::And(items) => Prop::And(items.iter().map(|p| p.rename(map)).collect()),
            Prop::Or(items) => Prop::Or(items.iter().map(|p| p.rename(map)).collect()),
            Prop::Iff(a, b) => Prop::Iff(Box::new(a.rename(map)), Box::new(b.rename(map))),
        }
    }

    /// Value under an assignment given as a bit set.
    pub(crate) fn eval_bits(&self, bits: u64) -> bool {
        match self {
            Prop::Const(b) => *b,
            Prop::Var(v) => bits >> v & 1 == 1,
            Prop::Not(p) => !p.eval_bits(bits),
            Prop::And(ps) => ps.iter().all(|p| p.eval_bits(bits)),
            Prop::Or(ps) => ps.iter().any(|p| p.eval_bits(bits)),
            Prop::Iff(a, b) => a.eval_bits(bits) == b.eval_bits(bits),
        }
    }

    pub(crate) fn iff(a: Prop, b: Prop) -> Prop {
        match (a, b) {
            (Prop::Const(x), other) | (other, Prop::Const(x)) => {
                if x {
                    other
                } else {
                    Prop::not(other)
                }
            }
            (a, b) => Prop::Iff(Box::new(a), Box::new(b)),
        }
    }
}

/// Interns ground atoms under a caller-chosen key.
#[derive(Debug, Default)]
pub(crate) struct AtomTable<K: Ord> {
    index: BTreeMap<K, usize>,
    keys: Vec<K>,
}

impl<K: Ord + Clone> AtomTable<K> {
    pub(crate) fn new() -> Self {
        AtomTable {
            index: BTreeMap::new(),
            keys: Vec::new(),
        }
    }

    pub(crate) fn get_or_insert(&mut self, key: K) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.keys.len();
        self.index.insert(key.clone(), i);
        self.keys.push(key);
        i
    }

    pub(crate) fn len(&self) -> usize {
        self.keys.len()
    }

    pub(crate) fn keys(&self) -> &[K] {
        &self.keys
    }
}

pub(crate) enum SatOutcome {
    Sat(Vec<bool>),
    Unsat,
    Exhausted,
}

type Lit = u32;

fn lit(var: usize, negative: bool) -> Lit {
    (var as Lit) << 1 | negative as Lit
}

fn neg(l: Lit) -> Lit {
    l ^ 1
}

fn var_of(l: Lit) -> usize {
    (l >> 1) as usize
}

/// Clause database built by Tseitin encoding.
struct Cnf {
    vars: usize,
    clauses: Vec<Vec<Lit>>,
    trivially_false: bool,
}

impl Cnf {
    fn new(atoms: usize) -> Self {
        Cnf {
            vars: atoms,
            clauses: Vec::new(),
            trivially_false: false,
        }
    }

    fn fresh(&mut self) -> usize {
        self.vars += 1;
        self.vars - 1
    }

    /// Literal equivalent to `p`, or a constant.
    fn encode(&mut self, p: &Prop) -> Result<Lit, bool> {
        match p {
            Prop::Const(b) => Err(*b),
            Prop::Var(v) => Ok(lit(*v, false)),
            Prop::Not(inner) => self.encode(inner).map(neg).map_err(|b| !b),
            Prop::And(items) | Prop::Or(items) => {
                let is_and = matches!(p, Prop::And(_));
                let mut lits = Vec::with_capacity(items.len());
                for item in items {
                    match self.encode(item) {
                        Ok(l) => lits.push(l),
                        Err(b) if b == is_and => {}
                        Err(b) => return Err(b),
                    }
                }
                if lits.is_empty() {
                    return Err(is_and);
                }
                if lits.len() == 1 {
                    return Ok(lits[0]);
                }
                let g = lit(self.fresh(), false);
                if is_and {
                    // g -> each; all -> g
                    let mut big = vec![g];
                    for &l in &lits {
                        self.clauses.push(vec![neg(g), l]);
                        big.push(neg(l));
                    }
                    self.clauses.push(big);
                } else {
                    let mut big = vec![neg(g)];
                    for &l in &lits {
                        self.clauses.push(vec![g, neg(l)]);
                        big.push(l);
                    }
                    self.clauses.push(big);
                }
                Ok(g)
            }
            Prop::Iff(a, b) => {
                let la = self.encode(a);
                let lb = self.encode(b);
                match (la, lb) {
                    (Err(x), Err(y)) => Err(x == y),
                    (Ok(l), Err(c)) | (Err(c), Ok(l)) => Ok(if c { l } else { neg(l) }),
                    (Ok(x), Ok(y)) => {
                        let g = lit(self.fresh(), false);
                        self.clauses.push(vec![neg(g), neg(x), y]);
                        self.clauses.push(vec![neg(g), x, neg(y)]);
                        self.clauses.push(vec![g, x, y]);
                        self.clauses.push(vec![g, neg(x), neg(y)]);
                        Ok(g)
                    }
                }
            }
        }
    }

    fn assert(&mut self, p: &Prop) {
        match p {
            Prop::And(items) => {
                for item in items {
                    self.assert(item);
                }
            }
            Prop::Or(items) => {
                let mut clause = Vec::new();
                for item in items {
                    match self.encode(item) {
                        Ok(l) => clause.push(l),
                        Err(true) => return,
                        Err(false) => {}
                    }
                }
                if clause.is_empty() {
                    self.trivially_false = true;
                } else {
                    self.clauses.push(clause);
                }
            }
            other => match self.encode(other) {
                Ok(l) => self.clauses.push(vec![l]),
                Err(true) => {}
                Err(false) => self.trivially_false = true,
            },
        }
    }
}

/// Searches for an assignment of the first `atoms` variables satisfying
/// every formula. `budget` counts decisions and conflicts and is
/// decremented.
pub(crate) fn satisfiable(formulas: &[Prop], atoms: usize, budget: &mut u64) -> SatOutcome {
    let mut cnf = Cnf::new(atoms);
    for f in formulas {
        cnf.assert(f);
        if cnf.trivially_false {
            return SatOutcome::Unsat;
        }
    }
    let mut dpll = Dpll::new(cnf.vars, cnf.clauses);
    match dpll.run(budget) {
        Some(true) => SatOutcome::Sat(
            dpll.assign[..atoms]
                .iter()
                .map(|&v| v == 1)
                .collect(),
        ),
        Some(false) => SatOutcome::Unsat,
        None => SatOutcome::Exhausted,
    }
}

/// Conflict-driven search: unit propagation over two watched literals,
/// first-UIP clause learning and non-chronological backjumping.
struct Dpll {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    /// 0 unassigned, 1 true, -1 false
    assign: Vec<i8>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    activity: Vec<f64>,
    phase: Vec<bool>,
    bump: f64,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    units: Vec<Lit>,
    empty: bool,
}

impl Dpll {
    fn new(vars: usize, raw: Vec<Vec<Lit>>) -> Self {
        let mut d = Dpll {
            clauses: Vec::with_capacity(raw.len()),
            watches: vec![Vec::new(); vars * 2],
            assign: vec![0; vars],
            level: vec![0; vars],
            reason: vec![None; vars],
            activity: vec![0.0; vars],
            phase: vec![false; vars],
            bump: 1.0,
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            units: Vec::new(),
            empty: false,
        };
        for mut c in raw {
            c.sort_unstable();
            c.dedup();
            if c.windows(2).any(|w| w[0] == neg(w[1])) {
                continue;
            }
            match c.len() {
                0 => d.empty = true,
                1 => d.units.push(c[0]),
                _ => {
                    d.add_clause(c);
                }
            }
        }
        d
    }

    fn add_clause(&mut self, c: Vec<Lit>) -> usize {
        let i = self.clauses.len();
        self.watches[neg(c[0]) as usize].push(i);
        self.watches[neg(c[1]) as usize].push(i);
        self.clauses.push(c);
        i
    }

    fn lit_value(assign: &[i8], l: Lit) -> i8 {
        let v = assign[var_of(l)];
        if l & 1 == 1 {
            -v
        } else {
            v
        }
    }

    fn value(&self, l: Lit) -> i8 {
        Self::lit_value(&self.assign, l)
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) -> bool {
        match self.value(l) {
            1 => true,
            -1 => false,
            _ => {
                let v = var_of(l);
                self.assign[v] = if l & 1 == 1 { -1 } else { 1 };
                self.level[v] = self.trail_lim.len();
                self.reason[v] = reason;
                self.trail.push(l);
                true
            }
        }
    }

    /// Returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let false_lit = neg(p);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let first_val = Self::lit_value(&self.assign, first);
                if first_val == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    if Self::lit_value(&self.assign, clause[k]) != -1 {
                        clause.swap(1, k);
                        let new_watch = neg(clause[1]) as usize;
                        self.watches[new_watch].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if first_val == -1 {
                    conflict = Some(ci);
                    break;
                }
                self.enqueue(first, Some(ci));
                i += 1;
            }
            let rest = std::mem::take(&mut self.watches[p as usize]);
            ws.extend(rest);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.bump;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.bump *= 1e-100;
        }
    }

    /// First-UIP learnt clause and the level to jump back to.
    fn analyze(&mut self, conflict: usize) -> (Vec<Lit>, usize) {
        let current = self.trail_lim.len();
        let mut seen = vec![false; self.assign.len()];
        let mut learnt: Vec<Lit> = vec![0];
        let mut counter = 0;
        let mut clause = conflict;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            let lits = self.clauses[clause].clone();
            for &q in lits.iter().skip(usize::from(p.is_some())) {
                let v = var_of(q);
                if !seen[v] && self.level[v] > 0 {
                    seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] == current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if seen[var_of(self.trail[idx])] {
                    break;
                }
            }
            let lit = self.trail[idx];
            seen[var_of(lit)] = false;
            counter -= 1;
            p = Some(lit);
            if counter == 0 {
                break;
            }
            clause = self.reason[var_of(lit)].expect("implied literal has a reason");
        }
        learnt[0] = neg(p.expect("conflict at decision level"));
        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for k in 1..learnt.len() {
                if self.level[var_of(learnt[k])] > self.level[var_of(learnt[best])] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            back = self.level[var_of(learnt[1])];
        }
        self.bump *= 1.05;
        (learnt, back)
    }

    fn backjump(&mut self, level: usize) {
        if self.trail_lim.len() <= level {
            return;
        }
        let start = self.trail_lim[level];
        while self.trail.len() > start {
            let l = self.trail.pop().unwrap();
            let v = var_of(l);
            self.phase[v] = l & 1 == 0;
            self.assign[v] = 0;
            self.reason[v] = None;
        }
        self.trail_lim.truncate(level);
        self.qhead = start;
    }

    fn pick(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for v in 0..self.assign.len() {
            if self.assign[v] == 0 && best.is_none_or(|b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best
    }

    fn run(&mut self, budget: &mut u64) -> Option<bool> {
        if self.empty {
            return Some(false);
        }
        for l in std::mem::take(&mut self.units) {
            if !self.enqueue(l, None) {
                return Some(false);
            }
        }
        loop {
            if let Some(conflict) = self.propagate() {
                if self.trail_lim.is_empty() {
                    return Some(false);
                }
                if *budget == 0 {
                    return None;
                }
                *budget -= 1;
                let (learnt, back) = self.analyze(conflict);
                self.backjump(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let l = learnt[0];
                    let ci = self.add_clause(learnt);
                    self.enqueue(l, Some(ci));
                }
                continue;
            }
            let Some(v) = self.pick() else {
                return Some(true);
            };
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            self.trail_lim.push(self.trail.len());
            self.enqueue(lit(v, !self.phase[v]), None);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Prop {
        Prop::Var(i)
    }

    fn sat(fs: &[Prop], atoms: usize) -> Option<Vec<bool>> {
        let mut budget = 1_000_000;
        match satisfiable(fs, atoms, &mut budget) {
            SatOutcome::Sat(m) => Some(m),
            SatOutcome::Unsat => None,
            SatOutcome::Exhausted => panic!("budget"),
        }
    }

    #[test]
    fn contradiction_is_unsat() {
        assert!(sat(&[v(0), Prop::not(v(0))], 1).is_none());
    }

    #[test]
    fn modus_ponens_countermodel_absent() {
        // p, p -> q, ~q
        let fs = [v(0), Prop::implies(v(0), v(1)), Prop::not(v(1))];
        assert!(sat(&fs, 2).is_none());
    }

    #[test]
    fn finds_model() {
        let fs = [Prop::or(vec![v(0), v(1)]), Prop::not(v(0))];
        assert_eq!(sat(&fs, 2), Some(vec![false, true]));
    }

    #[test]
    fn iff_gate() {
        let fs = [Prop::iff(v(0), v(1)), v(0), Prop::not(v(1))];
        assert!(sat(&fs, 2).is_none());
        let fs = [Prop::iff(v(0), Prop::not(v(1))), v(0)];
        assert_eq!(sat(&fs, 2), Some(vec![true, false]));
    }

    #[test]
    fn pigeonhole_three_into_two_is_unsat() {
        // var(p, h) = p * 2 + h
        let mut fs = Vec::new();
        for p in 0..3 {
            fs.push(Prop::or(vec![v(p * 2), v(p * 2 + 1)]));
        }
        for h in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    fs.push(Prop::not(Prop::and(vec![v(a * 2 + h), v(b * 2 + h)])));
                }
            }
        }
        assert!(sat(&fs, 6).is_none());
    }
}
