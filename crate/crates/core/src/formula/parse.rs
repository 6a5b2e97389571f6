//! Recursive-descent parser for the concrete syntax.
//!
//! ```text
//! formula  := iff
//! iff      := implies ( "<->" iff )?
//! implies  := or ( "->" implies )?
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "~" unary | ("forall" | "exists") ident "." formula | primary
//! primary  := "(" formula ")" | META | ident | ident "(" terms ")" | "$" ident "(" terms ")"
//! terms    := term ( "," term )*
//! term     := ident | "$" ident
//! default  := formula ":" formula ( "," formula )* "/" formula ( "@" int )?
//! ```
//!
//! A bare identifier starting with an uppercase letter is a formula
//! metavariable. In argument position an identifier is a variable when an
//! enclosing quantifier binds it and a constant otherwise; unbound names of
//! variable shape (`u`..`z` optionally followed by digits) are rejected in
//! sentences.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{DefaultRule, Formula, Pred, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unbound variable `{name}` at byte {offset}")]
    UnboundVariable { name: String, offset: usize },
    #[error("predicate `{name}` used with arity {first} and {second}")]
    ArityMismatch {
        name: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Dollar(String),
    Int(u32),
    Not,
    And,
    Or,
    Arrow,
    DArrow,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Slash,
    At,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Dollar(s) => write!(f, "`${s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Not => f.write_str("`~`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::DArrow => f.write_str("`<->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::At => f.write_str("`@`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let ident_end = |mut j: usize| {
        while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => {
                i += 1;
                Tok::Not
            }
            b'&' => {
                i += 1;
                Tok::And
            }
            b'|' => {
                i += 1;
                Tok::Or
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'.' => {
                i += 1;
                Tok::Dot
            }
            b':' => {
                i += 1;
                Tok::Colon
            }
            b'/' => {
                i += 1;
                Tok::Slash
            }
            b'@' => {
                i += 1;
                Tok::At
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Arrow
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 3;
                Tok::DArrow
            }
            b'$' if bytes.get(i + 1).is_some_and(|b| b.is_ascii_lowercase()) => {
                let end = ident_end(i + 1);
                let name = text[i + 1..end].to_string();
                i = end;
                Tok::Dollar(name)
            }
            c if c.is_ascii_alphabetic() => {
                let end = ident_end(i);
                let name = text[i..end].to_string();
                i = end;
                Tok::Ident(name)
            }
            c if c.is_ascii_digit() => {
                let mut end = i;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                let n = text[i..end].parse::<u32>().map_err(|_| ParseError::Syntax {
                    offset: start,
                    found: "integer out of range".into(),
                    expected: vec!["priority"],
                })?;
                i = end;
                Tok::Int(n)
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    found: format!("`{ch}`"),
                    expected: vec!["formula token"],
                });
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

fn is_variable_shaped(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('u'..='z')) && chars.all(|c| c.is_ascii_digit())
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    bound: Vec<String>,
    allow_free: bool,
    arities: BTreeMap<String, usize>,
}

impl Parser {
    fn new(text: &str, allow_free: bool) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            bound: Vec::new(),
            allow_free,
            arities: BTreeMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            found: self.peek().to_string(),
            expected,
        }
    }

    fn expect(&mut self, tok: Tok, label: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec![label]))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implies()?;
        if *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(kw) if kw == "forall" || kw == "exists" => {
                self.bump();
                let var = match self.peek().clone() {
                    Tok::Ident(v)
                        if v.starts_with(|c: char| c.is_ascii_lowercase())
                            && v != "forall"
                            && v != "exists" =>
                    {
                        self.bump();
                        v
                    }
                    _ => return Err(self.error(vec!["variable"])),
                };
                self.expect(Tok::Dot, "`.`")?;
                self.bound.push(var.clone());
                let body = self.formula();
                self.bound.pop();
                let body = body?;
                Ok(if kw == "forall" {
                    Formula::forall(var, body)
                } else {
                    Formula::exists(var, body)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let args = self.args()?;
                    self.record_arity(&name, args.len())?;
                    Ok(Formula::Atom(Pred::Name(name), args))
                } else if name.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Ok(Formula::Meta(name))
                } else {
                    self.record_arity(&name, 0)?;
                    Ok(Formula::Atom(Pred::Name(name), Vec::new()))
                }
            }
            Tok::Dollar(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Err(self.error(vec!["`(`"]));
                }
                let args = self.args()?;
                Ok(Formula::Atom(Pred::Meta(name), args))
            }
            _ => Err(self.error(vec!["`~`", "`(`", "`forall`", "`exists`", "identifier"])),
        }
    }

    fn record_arity(&mut self, name: &str, arity: usize) -> Result<(), ParseError> {
        match self.arities.get(name) {
            Some(&a) if a != arity => Err(ParseError::ArityMismatch {
                name: name.to_string(),
                first: a,
                second: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Ident(name) if name.starts_with(|c: char| c.is_ascii_lowercase()) => {
                if name == "forall" || name == "exists" {
                    return Err(self.error(vec!["term"]));
                }
                self.bump();
                if self.bound.contains(&name) {
                    Ok(Term::Var(name))
                } else if is_variable_shaped(&name) {
                    if self.allow_free {
                        Ok(Term::Var(name))
                    } else {
                        Err(ParseError::UnboundVariable { name, offset })
                    }
                } else {
                    Ok(Term::Const(name))
                }
            }
            Tok::Dollar(name) => {
                self.bump();
                Ok(Term::Meta(name))
            }
            _ => Err(self.error(vec!["term"])),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(vec!["end of input", "binary connective"]))
        }
    }
}

/// Parses a sentence: every variable must be bound by a quantifier.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, false)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses a formula that may contain free variables of variable shape.
pub fn parse_open_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, true)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses `prerequisite : justification, ... / consequent @ priority`.
pub fn parse_default(text: &str) -> Result<DefaultRule, ParseError> {
    let mut p = Parser::new(text, true)?;
    let prerequisite = p.formula()?;
    p.expect(Tok::Colon, "`:`")?;
    let mut justifications = vec![p.formula()?];
    while *p.peek() == Tok::Comma {
        p.bump();
        justifications.push(p.formula()?);
    }
    p.expect(Tok::Slash, "`/`")?;
    let consequent = p.formula()?;
    let mut priority = 0;
    if *p.peek() == Tok::At {
        p.bump();
        match p.bump() {
            Tok::Int(n) => priority = n,
            _ => {
                p.pos -= 1;
                return Err(p.error(vec!["priority"]));
            }
        }
    }
    p.finish()?;
    Ok(DefaultRule {
        prerequisite,
        justifications,
        consequent,
        priority,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implication_of_atoms() {
        assert_eq!(
            parse_formula("p -> q").unwrap(),
            Formula::implies(Formula::prop("p"), Formula::prop("q"))
        );
    }

    #[test]
    fn unbound_variable_rejected() {
        let err = parse_formula("forall x. (p(x) & q(x)) -> r(x, y)").unwrap_err();
        assert!(matches!(err, ParseError::UnboundVariable { ref name, .. } if name == "y"));
    }

    #[test]
    fn negated_conjunction() {
        assert_eq!(
            parse_formula("~(p & q)").unwrap(),
            Formula::not(Formula::and(Formula::prop("p"), Formula::prop("q")))
        );
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(
            parse_formula("  p->q&r ").unwrap(),
            parse_formula("p -> (q & r)").unwrap()
        );
    }

    #[test]
    fn implication_is_right_associative() {
        assert_eq!(
            parse_formula("p -> q -> r").unwrap(),
            Formula::implies(
                Formula::prop("p"),
                Formula::implies(Formula::prop("q"), Formula::prop("r"))
            )
        );
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let f = parse_formula("forall x. p(x) -> q(x)").unwrap();
        assert!(matches!(f, Formula::ForAll(_, ref body) if matches!(**body, Formula::Implies(..))));
    }

    #[test]
    fn identifiers_resolve_to_constants_or_metas() {
        let f = parse_formula("PHI & p(a, $b) & $q(c)").unwrap();
        assert!(f.has_metas());
        assert_eq!(f.constants().into_iter().collect::<Vec<_>>(), vec!["a", "c"]);
    }

    #[test]
    fn syntax_error_reports_offset_and_expectation() {
        match parse_formula("p & ").unwrap_err() {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"identifier"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_formula("p q").unwrap_err(),
            ParseError::Syntax { offset: 2, .. }
        ));
    }

    #[test]
    fn arity_clash_within_formula() {
        assert!(matches!(
            parse_formula("p(a) & p(a, b)").unwrap_err(),
            ParseError::ArityMismatch { .. }
        ));
    }

    #[test]
    fn defaults_parse_with_schematic_variables() {
        let d = parse_default("bird(x) : flies(x) / flies(x) @ 2").unwrap();
        assert_eq!(d.priority, 2);
        assert_eq!(d.justifications.len(), 1);
        assert_eq!(d.free_vars().into_iter().collect::<Vec<_>>(), vec!["x"]);
        assert!(parse_default("bird(x) / flies(x)").is_err());
    }
}
