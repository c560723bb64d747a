use std::collections::BTreeMap;

use num::One;

use super::{Formula, Inner};
use crate::syntax::{tokenize, Header, ParseError, ParseErrorKind, Parser, SourceSpan, TokenKind};

type PResult<T> = Result<T, ParseError>;

/// Parses `may <inner>` / `must <inner>` clauses joined by `and` / `or`.
///
/// Inner formulas are thresholds `P[<cond>] > <p>` with `0 ≤ p < 1`,
/// combined with `&` and `|` (or `&&`, `||`), `true`, `false` and
/// parentheses. Conditions are checked against `header`.
pub fn parse_formula(text: &str, header: &Header) -> Result<Formula, ParseError> {
    let gates = BTreeMap::new();
    let mut p = Parser::new(tokenize(text)?, header.clone(), &gates);
    let f = outer_or(&mut p)?;
    p.expect_eof()?;
    Ok(f)
}

fn outer_or(p: &mut Parser) -> PResult<Formula> {
    let mut parts = vec![outer_and(p)?];
    while p.at_ident("or") {
        p.bump();
        parts.push(outer_and(p)?);
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
}

fn outer_and(p: &mut Parser) -> PResult<Formula> {
    let mut parts = vec![outer_atom(p)?];
    while p.at_ident("and") {
        p.bump();
        parts.push(outer_atom(p)?);
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
}

fn outer_atom(p: &mut Parser) -> PResult<Formula> {
    if p.at_ident("may") {
        p.bump();
        return Ok(Formula::May(inner_or(p)?));
    }
    if p.at_ident("must") {
        p.bump();
        return Ok(Formula::Must(inner_or(p)?));
    }
    if p.at_ident("true") {
        p.bump();
        return Ok(Formula::Top);
    }
    if p.at_ident("false") {
        p.bump();
        return Ok(Formula::Bot);
    }
    if p.at(&TokenKind::LParen) {
        p.bump();
        let f = outer_or(p)?;
        p.expect(TokenKind::RParen, "`)`")?;
        return Ok(f);
    }
    p.error("expected `may`, `must`, `true`, `false` or `(`")
}

fn inner_or(p: &mut Parser) -> PResult<Inner> {
    let mut parts = vec![inner_and(p)?];
    while p.at(&TokenKind::Bar) || p.at(&TokenKind::ParBar) {
        p.bump();
        parts.push(inner_and(p)?);
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Inner::Or(parts) })
}

fn inner_and(p: &mut Parser) -> PResult<Inner> {
    let mut parts = vec![inner_atom(p)?];
    while p.at(&TokenKind::Amp) || p.at(&TokenKind::AndAnd) {
        p.bump();
        parts.push(inner_atom(p)?);
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Inner::And(parts) })
}

fn inner_atom(p: &mut Parser) -> PResult<Inner> {
    if p.at_ident("true") {
        p.bump();
        return Ok(Inner::Top);
    }
    if p.at_ident("false") {
        p.bump();
        return Ok(Inner::Bot);
    }
    if p.at(&TokenKind::LParen) {
        p.bump();
        let f = inner_or(p)?;
        p.expect(TokenKind::RParen, "`)`")?;
        return Ok(f);
    }
    if p.at_ident("P") {
        p.bump();
        p.expect(TokenKind::LBracket, "`[`")?;
        let cond = p.condition()?;
        p.expect(TokenKind::RBracket, "`]`")?;
        p.expect(TokenKind::Gt, "`>` (thresholds are strict)")?;
        let start = p.span();
        let prob = p.rational()?;
        if prob >= num::BigRational::one() {
            return Err(ParseError::new(
                ParseErrorKind::InvalidProbability,
                SourceSpan::new(start.start, start.end),
                format!("threshold {prob} must be below 1"),
            ));
        }
        return Ok(Inner::Threshold(cond, prob));
    }
    p.error("expected `P[...] > p`, `true`, `false` or `(`")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{CmpOp, Condition, Expr};
    use crate::valuation::Rational;

    fn h() -> Header {
        Header::classical(&["x", "c"])
    }

    fn thr(var: &str, v: i64, n: i64, d: i64) -> Inner {
        Inner::Threshold(Condition::cmp(Expr::var(var), CmpOp::Eq, Expr::int(v)), Rational::new(n.into(), d.into()))
    }

    #[test]
    fn simple_may() {
        assert_eq!(parse_formula("may P[x = 1] > 1/2", &h()).unwrap(), Formula::May(thr("x", 1, 1, 2)));
        assert_eq!(parse_formula("may P[true] > 0", &h()).unwrap(), Formula::May(Inner::Threshold(Condition::True, Rational::from_integer(0.into()))));
    }

    #[test]
    fn connectives() {
        let f = parse_formula("must (P[x = 1] > 1/4 & P[c = 0] > 0.25) or may false | P[x=0] > 0", &h()).unwrap();
        assert_eq!(
            f,
            Formula::Or(vec![
                Formula::Must(Inner::And(vec![thr("x", 1, 1, 4), thr("c", 0, 1, 4)])),
                Formula::May(Inner::Or(vec![Inner::Bot, thr("x", 0, 0, 1)])),
            ])
        );
        let g = parse_formula("may P[x = 1 && c = 0] > 0 and (must true)", &h()).unwrap();
        assert!(matches!(g, Formula::And(ref v) if v.len() == 2));
    }

    #[test]
    fn errors() {
        let e = parse_formula("may P[x = 1] > 1", &h()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidProbability);
        assert_eq!(e.span, SourceSpan::new(15, 16));
        let e = parse_formula("may P[x = 1] >= 1/2", &h()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        let e = parse_formula("may P[z = 1] > 0", &h()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownVariable);
        assert!(parse_formula("P[x = 1] > 0", &h()).is_err());
        assert!(parse_formula("may P[x = 1] > 0 extra", &h()).is_err());
    }

    #[test]
    fn display_reparses() {
        for text in ["may P[x = 1] > 1/2", "must (P[x = 1] > 1/4 & P[c = 0] > 0) or may (false | P[x = 0] > 0)", "true and false"] {
            let f = parse_formula(text, &h()).unwrap();
            assert_eq!(parse_formula(&f.to_string(), &h()).unwrap(), f, "{f}");
        }
        assert_eq!(parse_formula("may P[x = 1] > 0.5", &h()).unwrap().to_string(), "may P[x = 1] > 1/2");
    }

    #[test]
    fn quantum_conditions() {
        let f = parse_formula("may P[x1 = 1] > 1/4", &Header::quantum(1, 1)).unwrap();
        assert_eq!(f, Formula::May(Inner::Threshold(Condition::Bit { bit: 1, value: true }, Rational::new(1.into(), 4.into()))));
    }
}
