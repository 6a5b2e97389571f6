use crate::formula::{parse_default, parse_formula, DefaultRule, Formula};

use super::{DefaultPattern, Direction, Family, LogicClass, RuleSchema, SchemaBody};

/// Catalog order. Propositional rules are each followed by their
/// first-order variant so ties are broken the same way in both classes.
pub const RULE_ORDER: [&str; 40] = [
    "MP", "MP_F", "MT", "MT_F", "HS", "HS_F", "DS", "DS_F", "CD", "CD_F", "DD", "DD_F", "BD",
    "BD_F", "CT", "CT_F", "DMT", "DMT_F", "CO", "CO_F", "IM", "IM_F", "MI", "EG", "UI", "MV1",
    "MV2", "MV3", "MV4", "MV5", "MV6", "MV7", "DRS", "DRI", "DRD", "DRO", "REI", "REII", "REIII",
    "RAP",
];

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap_or_else(|e| panic!("bad built-in schema {s:?}: {e}"))
}

fn d(s: &str) -> DefaultRule {
    parse_default(s).unwrap_or_else(|e| panic!("bad built-in default {s:?}: {e}"))
}

fn one_way(premises: &[&str], conclusion: &str) -> Vec<Direction> {
    vec![Direction {
        premises: premises.iter().map(|p| f(p)).collect(),
        conclusion: f(conclusion),
    }]
}

fn both_ways(left: &str, right: &str) -> Vec<Direction> {
    vec![
        Direction {
            premises: vec![f(left)],
            conclusion: f(right),
        },
        Direction {
            premises: vec![f(right)],
            conclusion: f(left),
        },
    ]
}

fn deductive(
    id: &'static str,
    name: &'static str,
    family: Family,
    directions: Vec<Direction>,
) -> RuleSchema {
    let logic_class = match family {
        Family::PL => LogicClass::PL,
        Family::FOL | Family::MV => LogicClass::FOL,
        Family::NM => LogicClass::NM,
    };
    RuleSchema {
        id,
        name,
        family,
        logic_class,
        bidirectional: directions.len() == 2,
        body: SchemaBody::Deductive(directions),
    }
}

fn pattern(
    id: &'static str,
    name: &'static str,
    facts: &[&str],
    hard_rules: &[&str],
    defaults: &[&str],
    conclusion: &str,
) -> RuleSchema {
    RuleSchema {
        id,
        name,
        family: Family::NM,
        logic_class: LogicClass::NM,
        bidirectional: false,
        body: SchemaBody::Default(DefaultPattern {
            facts: facts.iter().map(|s| f(s)).collect(),
            hard_rules: hard_rules.iter().map(|s| f(s)).collect(),
            defaults: defaults.iter().map(|s| d(s)).collect(),
            conclusion: f(conclusion),
        }),
    }
}

const DILEMMA_F: &str = "forall x. (($p(x) -> $q(x)) & ($r(x) -> $s(x)))";

pub(super) fn build() -> Vec<RuleSchema> {
    use Family::*;
    let rules = vec![
        deductive("MP", "Modus Ponens", PL, one_way(&["P -> Q", "P"], "Q")),
        deductive(
            "MP_F",
            "Modus Ponens",
            FOL,
            one_way(&["forall x. ($p(x) -> $q(x))", "$p($a)"], "$q($a)"),
        ),
        deductive("MT", "Modus Tollens", PL, one_way(&["P -> Q", "~Q"], "~P")),
        deductive(
            "MT_F",
            "Modus Tollens",
            FOL,
            one_way(&["forall x. ($p(x) -> $q(x))", "~$q($a)"], "~$p($a)"),
        ),
        deductive(
            "HS",
            "Hypothetical Syllogism",
            PL,
            one_way(&["P -> Q", "Q -> R"], "P -> R"),
        ),
        deductive(
            "HS_F",
            "Hypothetical Syllogism",
            FOL,
            one_way(
                &["forall x. (($p(x) -> $q(x)) & ($q(x) -> $r(x)))"],
                "$p($a) -> $r($a)",
            ),
        ),
        deductive("DS", "Disjunctive Syllogism", PL, one_way(&["P | Q", "~P"], "Q")),
        deductive(
            "DS_F",
            "Disjunctive Syllogism",
            FOL,
            one_way(&["forall x. ($p(x) | $q(x))", "~$p($a)"], "$q($a)"),
        ),
        deductive(
            "CD",
            "Constructive Dilemma",
            PL,
            one_way(&["P -> Q", "R -> S", "P | R"], "Q | S"),
        ),
        deductive(
            "CD_F",
            "Constructive Dilemma",
            FOL,
            one_way(&[DILEMMA_F, "$p($a) | $r($a)"], "$q($a) | $s($a)"),
        ),
        deductive(
            "DD",
            "Destructive Dilemma",
            PL,
            one_way(&["P -> Q", "R -> S", "~Q | ~S"], "~P | ~R"),
        ),
        deductive(
            "DD_F",
            "Destructive Dilemma",
            FOL,
            one_way(&[DILEMMA_F, "~$q($a) | ~$s($a)"], "~$p($a) | ~$r($a)"),
        ),
        deductive(
            "BD",
            "Bidirectional Dilemma",
            PL,
            one_way(&["P -> Q", "R -> S", "P | ~S"], "Q | ~R"),
        ),
        deductive(
            "BD_F",
            "Bidirectional Dilemma",
            FOL,
            one_way(&[DILEMMA_F, "$p($a) | ~$s($a)"], "$q($a) | ~$r($a)"),
        ),
        deductive("CT", "Commutativity of Disjunction", PL, both_ways("P | Q", "Q | P")),
        deductive(
            "CT_F",
            "Commutativity of Disjunction",
            FOL,
            both_ways("forall x. ($p(x) | $q(x))", "forall x. ($q(x) | $p(x))"),
        ),
        deductive(
            "DMT",
            "De Morgan's Transformation",
            PL,
            both_ways("~(P & Q)", "~P | ~Q"),
        ),
        deductive(
            "DMT_F",
            "De Morgan's Transformation",
            FOL,
            both_ways(
                "~forall x. ($p(x) & $q(x))",
                "exists x. (~$p(x) | ~$q(x))",
            ),
        ),
        deductive(
            "CO",
            "Conjunction of Conclusions",
            PL,
            one_way(&["P -> Q", "P -> R"], "P -> Q & R"),
        ),
        deductive(
            "CO_F",
            "Conjunction of Conclusions",
            FOL,
            one_way(
                &["forall x. (($p(x) -> $q(x)) & ($p(x) -> $r(x)))"],
                "forall x. ($p(x) -> $q(x) & $r(x))",
            ),
        ),
        deductive(
            "IM",
            "Implication to Conjunction",
            PL,
            both_ways("P -> (Q -> R)", "P & Q -> R"),
        ),
        deductive(
            "IM_F",
            "Implication to Conjunction",
            FOL,
            both_ways(
                "forall x. ($p(x) -> ($q(x) -> $r(x)))",
                "forall x. ($p(x) & $q(x) -> $r(x))",
            ),
        ),
        deductive("MI", "Material Implication", PL, both_ways("P -> Q", "~P | Q")),
        deductive(
            "EG",
            "Existential Generalization",
            FOL,
            one_way(&["$p($a)"], "exists x. $p(x)"),
        ),
        deductive(
            "UI",
            "Universal Instantiation",
            FOL,
            one_way(&["forall x. $p(x)"], "$p($a)"),
        ),
        deductive(
            "MV1",
            "Multi-variable rule 1",
            MV,
            one_way(
                &[
                    "forall x. forall y. ($p(x) & $q(x) -> $r(x, y))",
                    "exists u. exists v. ($p(u) & ~$r(u, v))",
                ],
                "exists y. ~$q(y)",
            ),
        ),
        // The conclusion concerns the individual the counter-example is
        // about; ~q(b) does not follow.
        deductive(
            "MV2",
            "Multi-variable rule 2",
            MV,
            one_way(
                &[
                    "forall x. forall y. ($p(x) & $q(x) -> ~$s(x, y))",
                    "forall z. ($r(z) -> $p(z))",
                    "$r($a) & $s($a, $b)",
                ],
                "~$q($a)",
            ),
        ),
        // Universal in both positions: with an existential witness for q the
        // r-successor need not be the q-successor.
        deductive(
            "MV3",
            "Multi-variable rule 3",
            MV,
            one_way(
                &[
                    "forall x. forall y. ($p(x) -> $q(x, y))",
                    "forall u. forall v. ($q(u, v) & $r(u, v) -> $s(v))",
                    "exists z. exists k. ($p(z) & $r(z, k))",
                ],
                "exists w. $s(w)",
            ),
        ),
        deductive(
            "MV4",
            "Multi-variable rule 4",
            MV,
            one_way(
                &[
                    "forall x. forall y. forall z. ($p(x, y, z) -> $q(x, z) | $r(y))",
                    "exists u. exists v. exists w. ($p(u, v, w) & ~$q(u, w))",
                ],
                "exists s. $r(s)",
            ),
        ),
        deductive(
            "MV5",
            "Multi-variable rule 5",
            MV,
            one_way(
                &["forall x. ($p(x) -> exists y. $r(y, x))", "$p($a)"],
                "exists z. $r(z, $a)",
            ),
        ),
        deductive(
            "MV6",
            "Multi-variable rule 6",
            MV,
            one_way(
                &[
                    "forall x. forall y. ($p(x, y) | $q(x, y))",
                    "exists u. exists v. ~$q(u, v)",
                ],
                "exists z. exists w. $p(z, w)",
            ),
        ),
        deductive(
            "MV7",
            "Multi-variable rule 7",
            MV,
            one_way(
                &["forall x. forall y. ($p(x, y) -> $q(x) & $r(y))", "$p($a, $b)"],
                "$q($a) & $r($b)",
            ),
        ),
        // Two conflicting defaults fire on a; b is only reached by one.
        pattern(
            "DRS",
            "Default reasoning with several defaults",
            &["$p($a)", "$q($a)", "$p($b)"],
            &[],
            &["$p(x) : $r(x) / $r(x)", "$q(x) : ~$r(x) / ~$r(x)"],
            "$r($b)",
        ),
        pattern(
            "DRI",
            "Default reasoning with irrelevant information",
            &["$p($a)", "$s($a)"],
            &[],
            &["$p(x) : $q(x) / $q(x)"],
            "$q($a)",
        ),
        pattern(
            "DRD",
            "Default reasoning with a disabled default",
            &["$p($a)", "$p($b)", "$s($a)"],
            &["forall x. ($s(x) -> ~$q(x))"],
            &["$p(x) : $q(x) / $q(x)"],
            "$q($b)",
        ),
        // b is only known through the hard rule.
        pattern(
            "DRO",
            "Default reasoning in an open domain",
            &["$p($a)", "~$q($a)", "$r($b)"],
            &["forall x. ($r(x) -> $p(x))"],
            &["$p(x) : $q(x) / $q(x)"],
            "$q($b)",
        ),
        pattern(
            "REI",
            "Reasoning about unknown expectations I",
            &["$p($a)", "$p($b)", "~$q($a) | ~$q($b)"],
            &[],
            &["$p(x) : $q(x) / $q(x)"],
            "$q($a) | $q($b)",
        ),
        pattern(
            "REII",
            "Reasoning about unknown expectations II",
            &["$p($a)", "$p($b)", "$p($c)", "~$q($a) | ~$q($b)"],
            &[],
            &["$p(x) : $q(x) / $q(x)"],
            "$q($c)",
        ),
        pattern(
            "REIII",
            "Reasoning about unknown expectations III",
            &["$p($a)", "$p($b)", "~$q($a) | ~$q($b)"],
            &[],
            &["$p(x) : $q(x) / $q(x)", "$q(x) : $r(x) / $r(x)"],
            "$r($a) | $r($b)",
        ),
        pattern(
            "RAP",
            "Reasoning about priorities",
            &["$p($a)", "$q($a)"],
            &[],
            &["$p(x) : $r(x) / $r(x) @ 0", "$q(x) : ~$r(x) / ~$r(x) @ 1"],
            "$r($a)",
        ),
    ];
    debug_assert_eq!(rules.iter().map(|r| r.id).collect::<Vec<_>>(), RULE_ORDER);
    rules
}
