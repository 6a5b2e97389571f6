//! Canonical printing with the fewest parentheses the parser needs.

use super::{DefaultRule, Formula, Pred, Term};

const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const UNARY: u8 = 5;

pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(f, 0, true, &mut out);
    out
}

pub fn render_default(d: &DefaultRule) -> String {
    let justs: Vec<String> = d.justifications.iter().map(render_formula).collect();
    let mut out = format!(
        "{} : {} / {}",
        render_formula(&d.prerequisite),
        justs.join(", "),
        render_formula(&d.consequent)
    );
    if d.priority != 0 {
        out.push_str(&format!(" @ {}", d.priority));
    }
    out
}

fn term(t: &Term, out: &mut String) {
    match t {
        Term::Var(n) | Term::Const(n) => out.push_str(n),
        Term::Meta(n) => {
            out.push('$');
            out.push_str(n);
        }
    }
}

fn binary(f: &Formula) -> Option<(u8, bool, &str, &Formula, &Formula)> {
    // (precedence, right associative, operator, lhs, rhs)
    match f {
        Formula::And(a, b) => Some((AND, false, " & ", a, b)),
        Formula::Or(a, b) => Some((OR, false, " | ", a, b)),
        Formula::Implies(a, b) => Some((IMPLIES, true, " -> ", a, b)),
        Formula::Iff(a, b) => Some((IFF, true, " <-> ", a, b)),
        _ => None,
    }
}

/// `min_prec` is the weakest binding the context accepts without
/// parentheses; `rightmost` says nothing follows inside the current group,
/// which is what lets a quantifier body run to the right unparenthesised.
fn write(f: &Formula, min_prec: u8, rightmost: bool, out: &mut String) {
    if let Some((prec, right_assoc, op, lhs, rhs)) = binary(f) {
        let paren = prec < min_prec;
        let rightmost = rightmost || paren;
        if paren {
            out.push('(');
        }
        let (lmin, rmin) = if right_assoc {
            (prec + 1, prec)
        } else {
            (prec, prec + 1)
        };
        write(lhs, lmin, false, out);
        out.push_str(op);
        write(rhs, rmin, rightmost, out);
        if paren {
            out.push(')');
        }
        return;
    }
    match f {
        Formula::Atom(p, args) => {
            if let Pred::Meta(_) = p {
                out.push('$');
            }
            out.push_str(p.name());
            if !args.is_empty() {
                out.push('(');
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    term(t, out);
                }
                out.push(')');
            }
        }
        Formula::Meta(n) => out.push_str(n),
        Formula::Not(inner) => {
            out.push('~');
            write(inner, UNARY, rightmost, out);
        }
        Formula::ForAll(v, body) | Formula::Exists(v, body) => {
            let kw = if matches!(f, Formula::ForAll(..)) {
                "forall"
            } else {
                "exists"
            };
            if !rightmost {
                out.push('(');
            }
            out.push_str(kw);
            out.push(' ');
            out.push_str(v);
            out.push_str(". ");
            write(body, 0, true, out);
            if !rightmost {
                out.push(')');
            }
        }
        _ => unreachable!("binary connectives handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Term};

    fn p(n: &str) -> Formula {
        Formula::prop(n)
    }

    #[test]
    fn right_associative_implication() {
        let f = Formula::implies(p("p"), Formula::implies(p("q"), p("r")));
        assert_eq!(render_formula(&f), "p -> q -> r");
        let g = Formula::implies(Formula::implies(p("p"), p("q")), p("r"));
        assert_eq!(render_formula(&g), "(p -> q) -> r");
    }

    #[test]
    fn disjunction_under_conjunction() {
        let f = Formula::and(Formula::or(p("p"), p("q")), p("r"));
        assert_eq!(render_formula(&f), "(p | q) & r");
    }

    #[test]
    fn nested_quantifiers() {
        let f = Formula::forall(
            "x",
            Formula::exists(
                "y",
                Formula::pred("r", vec![Term::var("y"), Term::var("x")]),
            ),
        );
        assert_eq!(render_formula(&f), "forall x. exists y. r(y, x)");
    }

    #[test]
    fn negation_round_trip() {
        let f = parse_formula("~(p & q)").unwrap();
        assert_eq!(render_formula(&f), "~(p & q)");
    }

    #[test]
    fn quantifier_left_of_connective_is_parenthesised() {
        let f = Formula::and(
            Formula::forall("x", Formula::pred("p", vec![Term::var("x")])),
            p("q"),
        );
        assert_eq!(render_formula(&f), "(forall x. p(x)) & q");
        assert_eq!(parse_formula(&render_formula(&f)).unwrap(), f);
        let g = Formula::or(
            Formula::and(
                p("q"),
                Formula::forall("x", Formula::pred("p", vec![Term::var("x")])),
            ),
            p("r"),
        );
        assert_eq!(parse_formula(&render_formula(&g)).unwrap(), g);
    }

    #[test]
    fn same_precedence_grouping_is_preserved() {
        let f = Formula::and(p("a"), Formula::and(p("b"), p("c")));
        assert_eq!(render_formula(&f), "a & (b & c)");
        let g = Formula::and(Formula::and(p("a"), p("b")), p("c"));
        assert_eq!(render_formula(&g), "a & b & c");
    }
}
