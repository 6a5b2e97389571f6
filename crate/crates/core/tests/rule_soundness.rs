use reasonbench::chain::fresh_instances;
use reasonbench::formula::{parse_default, parse_formula, Formula};
use reasonbench::oracle::{theory_constants, DefaultTheory, Oracle, Status};
use reasonbench::rules::{apply_rule_with_defaults, catalog, Family, LogicClass};

#[test]
fn propositional_rules_hold_by_truth_table() {
    let oracle = Oracle::default();
    let mut checked = 0;
    for rule in catalog().by_family(Family::PL) {
        for inst in fresh_instances(rule) {
            let v = oracle.pl_entails(&inst.premises, &inst.conclusion).unwrap();
            assert_eq!(v.status, Status::Entailed, "{} {:?}", rule.id, inst);
            checked += 1;
        }
    }
    // 8 one-way rules plus 4 bidirectional ones
    assert_eq!(checked, 16);
}

#[test]
fn first_order_rules_have_no_small_countermodel() {
    let oracle = Oracle::default();
    for rule in catalog().by_class(LogicClass::FOL) {
        for inst in fresh_instances(rule) {
            let v = oracle
                .fol_entails_finite(&inst.premises, &inst.conclusion, 3)
                .unwrap();
            assert_eq!(v.status, Status::Entailed, "{}", rule.id);
            assert_eq!(v.domain_bound, Some(3));
        }
    }
}

#[test]
fn as_printed_multi_variable_rules_fail() {
    let oracle = Oracle::default();
    let f = |s: &str| parse_formula(s).unwrap();
    let mv2 = [
        f("forall x. forall y. (p(x) & q(x) -> ~s(x, y))"),
        f("forall z. (r(z) -> p(z))"),
        f("r(a) & s(a, b)"),
    ];
    let v = oracle.fol_entails_finite(&mv2, &f("~q(b)"), 3).unwrap();
    assert_eq!(v.status, Status::NotEntailed);
    let mv3 = [
        f("forall x. exists y. (p(x) -> q(x, y))"),
        f("forall u. forall v. (q(u, v) & r(u, v) -> s(v))"),
        f("exists z. exists k. (p(z) & r(z, k))"),
    ];
    let v = oracle.fol_entails_finite(&mv3, &f("exists w. s(w)"), 3).unwrap();
    assert_eq!(v.status, Status::NotEntailed);
}

#[test]
fn default_patterns_entail_their_conclusion() {
    let oracle = Oracle::default();
    for rule in catalog().by_class(LogicClass::NM) {
        for inst in fresh_instances(rule) {
            let theory = DefaultTheory::split(&inst.premises, &inst.defaults);
            let constants = theory_constants(&inst.premises, &inst.defaults, Some(&inst.conclusion));
            let v = oracle.default_entails(&theory, &constants, &inst.conclusion).unwrap();
            assert_eq!(v.status, Status::Entailed, "{}", rule.id);
            let applied = apply_rule_with_defaults(rule.id, &inst.premises, &inst.defaults).unwrap();
            assert!(applied.contains(&inst.conclusion), "{}", rule.id);
        }
    }
}

#[test]
fn apply_rule_agrees_with_truth_tables() {
    let oracle = Oracle::default();
    let premises: Vec<Formula> = ["a -> b", "b -> c", "a", "~c", "a | d", "~(a & d)"]
        .iter()
        .map(|s| parse_formula(s).unwrap())
        .collect();
    let classes = [LogicClass::PL].into_iter().collect();
    for hit in reasonbench::rules::applicable_rules(&premises, &classes) {
        let used: Vec<Formula> = hit.premises.iter().map(|&i| premises[i].clone()).collect();
        assert!(oracle.pl_entails(&used, &hit.conclusion).unwrap().is_entailed(), "{hit:?}");
    }
}

#[test]
fn disabled_default_regression() {
    let oracle = Oracle::default();
    let f = |s: &str| parse_formula(s).unwrap();
    let d = parse_default("bird(x) : flies(x) / flies(x)").unwrap();
    let base = DefaultTheory {
        facts: vec![f("bird(a)")],
        hard_rules: vec![f("forall x. (penguin(x) -> ~flies(x))")],
        defaults: vec![d],
    };
    let consts = vec!["a".to_string()];
    assert!(oracle.default_entails(&base, &consts, &f("flies(a)")).unwrap().is_entailed());
    let mut more = base.clone();
    more.facts.push(f("penguin(a)"));
    assert_eq!(
        oracle.default_entails(&more, &consts, &f("flies(a)")).unwrap().status,
        Status::NotEntailed
    );
}
