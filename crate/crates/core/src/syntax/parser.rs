use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, One, Zero};

use super::lexer::{tokenize, Token, TokenKind};
use super::{
    Atomic, BinOp, CmpOp, Condition, Expr, Header, ParseError, ParseErrorKind, Program, ProgramFile, Rational,
    SourceSpan, BUILTIN_GATES,
};

const KEYWORDS: &[&str] = &["skip", "if", "then", "else", "while", "true", "false"];

/// Parser configuration. `gates` maps every admissible gate name to its arity.
#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub gates: BTreeMap<String, usize>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { gates: BUILTIN_GATES.iter().map(|(n, k)| (n.to_string(), *k)).collect() }
    }
}

/// Parses a program file (optional header followed by a program) with the
/// built-in gate library.
pub fn parse_program(text: &str) -> Result<ProgramFile, ParseError> {
    parse_program_with(text, &ParseOptions::default())
}

pub fn parse_program_with(text: &str, opts: &ParseOptions) -> Result<ProgramFile, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser::new(toks, Header::Classical { vars: Vec::new(), declared: false }, &opts.gates);
    let header = p.header()?;
    let program = p.program()?;
    if p.at(&TokenKind::Semi) {
        p.bump();
    }
    p.expect_eof()?;
    let header = match header {
        Header::Classical { declared: false, .. } => {
            Header::Classical { vars: program.variables().into_iter().collect(), declared: false }
        }
        h => h,
    };
    Ok(ProgramFile { header, program })
}

/// Parses a standalone condition against a header.
pub fn parse_condition(text: &str, header: &Header) -> Result<Condition, ParseError> {
    let toks = tokenize(text)?;
    let gates = BTreeMap::new();
    let mut p = Parser::new(toks, header.clone(), &gates);
    let c = p.condition()?;
    p.expect_eof()?;
    Ok(c)
}

#[derive(Clone)]
enum Ctx {
    Classical { vars: Option<BTreeSet<String>> },
    Quantum { bits: usize, qubits: usize },
}

pub(crate) struct Parser<'g> {
    toks: Vec<Token>,
    pos: usize,
    ctx: Ctx,
    gates: &'g BTreeMap<String, usize>,
}

type PResult<T> = Result<T, ParseError>;

impl<'g> Parser<'g> {
    pub(crate) fn new(toks: Vec<Token>, header: Header, gates: &'g BTreeMap<String, usize>) -> Self {
        let ctx = ctx_of(&header);
        Parser { toks, pos: 0, ctx, gates }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub(crate) fn peek_kind(&self) -> &TokenKind {
        &self.toks[self.pos].kind
    }

    fn peek_at(&self, k: usize) -> &TokenKind {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].kind
    }

    pub(crate) fn at(&self, k: &TokenKind) -> bool {
        self.peek_kind() == k
    }

    pub(crate) fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Ident(s) if s == word)
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn span(&self) -> SourceSpan {
        self.peek().span
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::new(ParseErrorKind::Syntax, self.span(), msg))
    }

    pub(crate) fn expect(&mut self, k: TokenKind, what: &str) -> PResult<Token> {
        if self.at(&k) {
            Ok(self.bump())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek_kind())))
        }
    }

    pub(crate) fn expect_ident(&mut self, word: &str) -> PResult<Token> {
        if self.at_ident(word) {
            Ok(self.bump())
        } else {
            self.error(format!("expected `{word}`, found {}", describe(self.peek_kind())))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> PResult<()> {
        if self.at(&TokenKind::Eof) {
            Ok(())
        } else {
            self.error(format!("unexpected {}", describe(self.peek_kind())))
        }
    }

    fn header(&mut self) -> PResult<Header> {
        if self.at_ident("var") && matches!(self.peek_at(1), TokenKind::Ident(_)) {
            self.bump();
            let mut vars = vec![self.var_name()?];
            while self.at(&TokenKind::Comma) {
                self.bump();
                vars.push(self.var_name()?);
            }
            self.expect(TokenKind::Semi, "`;` after variable declarations")?;
            let header = Header::classical(&vars);
            self.ctx = ctx_of(&header);
            Ok(header)
        } else if self.at_ident("bits") && matches!(self.peek_at(1), TokenKind::Number(_)) {
            self.bump();
            let bits = self.nat()?;
            self.expect_ident("qubits")?;
            let qubits = self.nat()?;
            self.expect(TokenKind::Semi, "`;` after the header")?;
            let header = Header::quantum(bits, qubits);
            self.ctx = ctx_of(&header);
            Ok(header)
        } else {
            Ok(Header::Classical { vars: Vec::new(), declared: false })
        }
    }

    fn var_name(&mut self) -> PResult<String> {
        match self.peek_kind().clone() {
            TokenKind::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected a variable name, found {}", describe(&other))),
        }
    }

    fn nat(&mut self) -> PResult<usize> {
        match self.peek_kind().clone() {
            TokenKind::Number(s) if !s.contains('.') => {
                let span = self.span();
                self.bump();
                s.parse().map_err(|_| ParseError::new(ParseErrorKind::Syntax, span, "number too large"))
            }
            other => self.error(format!("expected a natural number, found {}", describe(&other))),
        }
    }

    /// `program := par ( "+[" rational "]" par | "+" par )*`
    pub(crate) fn program(&mut self) -> PResult<Program> {
        let mut lhs = self.par()?;
        while self.at(&TokenKind::Plus) {
            self.bump();
            if self.at(&TokenKind::LBracket) {
                self.bump();
                let span = self.span();
                let p = self.rational()?;
                if p > BigRational::one() {
                    return Err(ParseError::new(
                        ParseErrorKind::InvalidProbability,
                        span.join(self.toks[self.pos - 1].span),
                        format!("choice probability {p} is not in [0, 1]"),
                    ));
                }
                self.expect(TokenKind::RBracket, "`]`")?;
                let rhs = self.par()?;
                lhs = Program::pchoice(p, lhs, rhs);
            } else {
                let rhs = self.par()?;
                lhs = Program::nchoice(lhs, rhs);
            }
        }
        Ok(lhs)
    }

    fn par(&mut self) -> PResult<Program> {
        let mut lhs = self.seq()?;
        while self.at(&TokenKind::ParBar) {
            self.bump();
            let rhs = self.seq()?;
            lhs = Program::par(lhs, rhs);
        }
        Ok(lhs)
    }

    fn seq(&mut self) -> PResult<Program> {
        let mut lhs = self.unit()?;
        while self.at(&TokenKind::Semi) && !self.trailing_semi() {
            self.bump();
            let rhs = self.unit()?;
            lhs = Program::seq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn trailing_semi(&self) -> bool {
        matches!(self.peek_at(1), TokenKind::Eof | TokenKind::RBrace | TokenKind::RParen)
    }

    fn unit(&mut self) -> PResult<Program> {
        match self.peek_kind().clone() {
            TokenKind::Ident(w) if w == "skip" => {
                self.bump();
                Ok(Program::Skip)
            }
            TokenKind::Ident(w) if w == "if" => {
                self.bump();
                let c = self.condition()?;
                self.expect_ident("then")?;
                let p = self.block()?;
                self.expect_ident("else")?;
                let q = self.block()?;
                Ok(Program::if_then_else(c, p, q))
            }
            TokenKind::Ident(w) if w == "while" => {
                self.bump();
                let c = self.condition()?;
                let body = self.block()?;
                Ok(Program::while_loop(c, body))
            }
            TokenKind::LParen => {
                self.bump();
                let p = self.program()?;
                if self.at(&TokenKind::Semi) {
                    self.bump();
                }
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(p)
            }
            TokenKind::Ident(_) => self.atomic().map(Program::Atomic),
            other => self.error(format!("expected a program, found {}", describe(&other))),
        }
    }

    fn block(&mut self) -> PResult<Program> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let p = self.program()?;
        if self.at(&TokenKind::Semi) {
            self.bump();
        }
        self.expect(TokenKind::RBrace, "`}`")?;
        Ok(p)
    }

    fn atomic(&mut self) -> PResult<Atomic> {
        let name_tok = self.bump();
        let TokenKind::Ident(name) = name_tok.kind.clone() else { unreachable!("atomic called on non-identifier") };
        match self.ctx.clone() {
            Ctx::Classical { .. } => {
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        name_tok.span,
                        format!("unexpected keyword `{name}`"),
                    ));
                }
                match self.peek_kind() {
                    TokenKind::Assign => {
                        self.bump();
                        self.check_var(&name, name_tok.span)?;
                        let expr = self.expr()?;
                        Ok(Atomic::Assign { var: name, expr })
                    }
                    TokenKind::RandAssign => {
                        self.bump();
                        self.check_var(&name, name_tok.span)?;
                        let branches = self.rand_branches()?;
                        Ok(Atomic::RandAssign { var: name, branches })
                    }
                    _ => Err(ParseError::new(
                        ParseErrorKind::UnknownAtomic,
                        name_tok.span,
                        format!("unknown atomic program `{name}` (classical programs use `x := e` or `x :~ {{...}}`)"),
                    )),
                }
            }
            Ctx::Quantum { bits, qubits } => {
                if name == "M" && self.at(&TokenKind::LBracket) {
                    self.bump();
                    let bit = self.indexed('x', bits, "bit")?;
                    self.expect(TokenKind::Arrow, "`<-`")?;
                    let qubit = self.indexed('q', qubits, "qubit")?;
                    self.expect(TokenKind::RBracket, "`]`")?;
                    return Ok(Atomic::Measure { bit, qubit });
                }
                if self.at(&TokenKind::Arrow) {
                    let qubit = index_of(&name, 'q', qubits).ok_or_else(|| {
                        ParseError::new(
                            ParseErrorKind::UnknownVariable,
                            name_tok.span,
                            format!("`{name}` is not a declared qubit (q1..q{qubits})"),
                        )
                    })?;
                    self.bump();
                    self.expect(TokenKind::Bar, "`|0>`")?;
                    match self.peek_kind() {
                        TokenKind::Number(n) if n == "0" => {
                            self.bump();
                        }
                        _ => return self.error("qubits can only be reset to `|0>`"),
                    }
                    self.expect(TokenKind::Gt, "`>`")?;
                    return Ok(Atomic::Reset { qubit });
                }
                if self.at(&TokenKind::LParen) {
                    let Some(&arity) = self.gates.get(&name) else {
                        return Err(ParseError::new(
                            ParseErrorKind::UnknownAtomic,
                            name_tok.span,
                            format!("unknown gate `{name}`"),
                        ));
                    };
                    let open = self.bump();
                    let mut qs = vec![self.indexed('q', qubits, "qubit")?];
                    while self.at(&TokenKind::Comma) {
                        self.bump();
                        qs.push(self.indexed('q', qubits, "qubit")?);
                    }
                    let close = self.expect(TokenKind::RParen, "`)`")?;
                    let span = open.span.join(close.span);
                    if qs.len() != arity {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            span,
                            format!("gate `{name}` takes {arity} qubit(s), got {}", qs.len()),
                        ));
                    }
                    let distinct: BTreeSet<_> = qs.iter().collect();
                    if distinct.len() != qs.len() {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            span,
                            format!("gate `{name}` applied to repeated qubits"),
                        ));
                    }
                    return Ok(Atomic::Gate { name, qubits: qs });
                }
                Err(ParseError::new(
                    ParseErrorKind::UnknownAtomic,
                    name_tok.span,
                    format!("unknown atomic program `{name}`"),
                ))
            }
        }
    }

    fn indexed(&mut self, prefix: char, bound: usize, what: &str) -> PResult<usize> {
        match self.peek_kind().clone() {
            TokenKind::Ident(s) => {
                let span = self.span();
                let idx = index_of(&s, prefix, bound).ok_or_else(|| {
                    ParseError::new(
                        ParseErrorKind::UnknownVariable,
                        span,
                        format!("`{s}` is not a declared {what} ({prefix}1..{prefix}{bound})"),
                    )
                })?;
                self.bump();
                Ok(idx)
            }
            other => self.error(format!("expected a {what}, found {}", describe(&other))),
        }
    }

    fn check_var(&self, name: &str, span: SourceSpan) -> PResult<()> {
        match &self.ctx {
            Ctx::Classical { vars: Some(vars) } if !vars.contains(name) => Err(ParseError::new(
                ParseErrorKind::UnknownVariable,
                span,
                format!("variable `{name}` is not declared"),
            )),
            _ => Ok(()),
        }
    }

    fn rand_branches(&mut self) -> PResult<Vec<(Rational, Expr)>> {
        let open = self.expect(TokenKind::LBrace, "`{`")?;
        let mut branches = Vec::new();
        loop {
            let span = self.span();
            let w = self.rational()?;
            if w.is_zero() {
                return Err(ParseError::new(ParseErrorKind::InvalidProbability, span, "branch weights must be positive"));
            }
            self.expect(TokenKind::Colon, "`:`")?;
            let e = self.expr()?;
            branches.push((w, e));
            if self.at(&TokenKind::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        let close = self.expect(TokenKind::RBrace, "`}`")?;
        let total: BigRational = branches.iter().map(|(w, _)| w.clone()).sum();
        if !total.is_one() {
            return Err(ParseError::new(
                ParseErrorKind::InvalidProbability,
                open.span.join(close.span),
                format!("branch weights sum to {total}, not 1"),
            ));
        }
        Ok(branches)
    }

    /// `num`, `num/den` or a finite decimal, as an exact non-negative rational.
    pub(crate) fn rational(&mut self) -> PResult<Rational> {
        let start = self.span();
        let TokenKind::Number(n) = self.peek_kind().clone() else {
            return self.error(format!("expected a rational number, found {}", describe(self.peek_kind())));
        };
        self.bump();
        let mut value = decimal_to_rational(&n);
        if self.at(&TokenKind::Slash) {
            self.bump();
            let den_span = self.span();
            let TokenKind::Number(d) = self.peek_kind().clone() else {
                return self.error("expected a denominator");
            };
            self.bump();
            let den = decimal_to_rational(&d);
            if den.is_zero() {
                return Err(ParseError::new(ParseErrorKind::InvalidProbability, start.join(den_span), "zero denominator"));
            }
            value /= den;
        }
        Ok(value)
    }

    pub(crate) fn condition(&mut self) -> PResult<Condition> {
        let mut lhs = self.cond_and()?;
        while self.at(&TokenKind::ParBar) {
            self.bump();
            let rhs = self.cond_and()?;
            lhs = Condition::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<Condition> {
        let mut lhs = self.cond_not()?;
        while self.at(&TokenKind::AndAnd) {
            self.bump();
            let rhs = self.cond_not()?;
            lhs = Condition::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn cond_not(&mut self) -> PResult<Condition> {
        if self.at(&TokenKind::Bang) {
            self.bump();
            return Ok(Condition::not(self.cond_not()?));
        }
        self.cond_atom()
    }

    fn cond_atom(&mut self) -> PResult<Condition> {
        if self.at_ident("true") {
            self.bump();
            return Ok(Condition::True);
        }
        if self.at_ident("false") {
            self.bump();
            return Ok(Condition::False);
        }
        if let Ctx::Quantum { bits, .. } = self.ctx {
            if self.at(&TokenKind::LParen) {
                self.bump();
                let c = self.condition()?;
                self.expect(TokenKind::RParen, "`)`")?;
                return Ok(c);
            }
            let bit = self.indexed('x', bits, "bit")?;
            let negate = match self.peek_kind() {
                TokenKind::EqEq => false,
                TokenKind::Ne => true,
                other => return self.error(format!("expected `=` or `!=`, found {}", describe(other))),
            };
            self.bump();
            let value = match self.peek_kind() {
                TokenKind::Number(n) if n == "0" => false,
                TokenKind::Number(n) if n == "1" => true,
                other => return self.error(format!("bits compare against 0 or 1, found {}", describe(other))),
            };
            self.bump();
            return Ok(Condition::Bit { bit, value: value != negate });
        }
        if self.at(&TokenKind::LParen) {
            let save = self.pos;
            match self.comparison() {
                Ok(c) => return Ok(c),
                Err(first) => {
                    self.pos = save;
                    self.bump();
                    let inner = self.condition();
                    match inner {
                        Ok(c) => {
                            self.expect(TokenKind::RParen, "`)`")?;
                            return Ok(c);
                        }
                        Err(second) => return Err(if second.span.start >= first.span.start { second } else { first }),
                    }
                }
            }
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Condition> {
        let lhs = self.expr()?;
        let op = match self.peek_kind() {
            TokenKind::EqEq => CmpOp::Eq,
            TokenKind::Ne => CmpOp::Ne,
            TokenKind::Lt | TokenKind::Arrow => CmpOp::Lt,
            TokenKind::Le => CmpOp::Le,
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::Ge => CmpOp::Ge,
            other => return self.error(format!("expected a comparison operator, found {}", describe(other))),
        };
        let arrow = self.at(&TokenKind::Arrow);
        self.bump();
        // `x<-1` lexes as `<-`; read it as `x < -1`.
        let rhs = if arrow { self.negated_factor()? } else { self.expr()? };
        Ok(Condition::Cmp(lhs, op, rhs))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Plus if !self.plus_starts_program() => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    /// Decides whether the `+` under the cursor is nondeterministic choice
    /// rather than addition.
    fn plus_starts_program(&self) -> bool {
        match self.peek_at(1) {
            TokenKind::LBracket => true,
            TokenKind::Ident(w) if matches!(w.as_str(), "skip" | "if" | "while") => true,
            TokenKind::Ident(_) => matches!(self.peek_at(2), TokenKind::Assign | TokenKind::RandAssign),
            TokenKind::LParen => {
                let mut probe = Parser { toks: self.toks.clone(), pos: self.pos + 1, ctx: self.ctx.clone(), gates: self.gates };
                probe.factor().is_err()
            }
            _ => false,
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Expr> {
        match self.peek_kind().clone() {
            TokenKind::Number(n) => {
                if n.contains('.') {
                    return self.error("integer expressions take integer literals");
                }
                self.bump();
                Ok(Expr::Const(n.parse::<BigInt>().expect("lexer yields digits")))
            }
            TokenKind::Minus => {
                self.bump();
                self.negated_factor()
            }
            TokenKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let span = self.span();
                self.check_var(&name, span)?;
                self.bump();
                Ok(Expr::Var(name))
            }
            other => self.error(format!("expected an expression, found {}", describe(&other))),
        }
    }

    /// Operand following a unary minus: literals fold into a negative constant.
    fn negated_factor(&mut self) -> PResult<Expr> {
        if let TokenKind::Number(n) = self.peek_kind().clone() {
            if !n.contains('.') {
                self.bump();
                return Ok(Expr::Const(-n.parse::<BigInt>().expect("lexer yields digits")));
            }
        }
        Ok(Expr::Neg(Box::new(self.factor()?)))
    }
}

fn ctx_of(header: &Header) -> Ctx {
    match header {
        Header::Classical { vars, declared } => {
            Ctx::Classical { vars: declared.then(|| vars.iter().cloned().collect()) }
        }
        Header::Quantum { bits, qubits } => Ctx::Quantum { bits: *bits, qubits: *qubits },
    }
}

fn index_of(name: &str, prefix: char, bound: usize) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    let rest = rest.strip_prefix('_').unwrap_or(rest);
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || rest.starts_with('0') {
        return None;
    }
    let i: usize = rest.parse().ok()?;
    (1..=bound).contains(&i).then_some(i)
}

fn decimal_to_rational(s: &str) -> BigRational {
    match s.split_once('.') {
        None => BigRational::from_integer(s.parse::<BigInt>().expect("lexer yields digits")),
        Some((int, frac)) => {
            let num: BigInt = format!("{int}{frac}").parse().expect("lexer yields digits");
            let den = num::pow(BigInt::from(10), frac.len());
            BigRational::new(num, den)
        }
    }
}

fn describe(k: &TokenKind) -> String {
    match k {
        TokenKind::Ident(s) => format!("`{s}`"),
        TokenKind::Number(s) => format!("`{s}`"),
        TokenKind::Eof => "end of input".to_string(),
        other => format!("`{}`", symbol(other)),
    }
}

fn symbol(k: &TokenKind) -> &'static str {
    match k {
        TokenKind::Semi => ";",
        TokenKind::Comma => ",",
        TokenKind::Colon => ":",
        TokenKind::ParBar => "||",
        TokenKind::Bar => "|",
        TokenKind::AndAnd => "&&",
        TokenKind::Amp => "&",
        TokenKind::Bang => "!",
        TokenKind::Plus => "+",
        TokenKind::Minus => "-",
        TokenKind::Star => "*",
        TokenKind::Slash => "/",
        TokenKind::LParen => "(",
        TokenKind::RParen => ")",
        TokenKind::LBrace => "{",
        TokenKind::RBrace => "}",
        TokenKind::LBracket => "[",
        TokenKind::RBracket => "]",
        TokenKind::Assign => ":=",
        TokenKind::RandAssign => ":~",
        TokenKind::Arrow => "<-",
        TokenKind::EqEq => "=",
        TokenKind::Ne => "!=",
        TokenKind::Lt => "<",
        TokenKind::Le => "<=",
        TokenKind::Gt => ">",
        TokenKind::Ge => ">=",
        TokenKind::Ident(_) | TokenKind::Number(_) | TokenKind::Eof => "",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::pretty_print;

    fn prog(src: &str) -> Program {
        parse_program(src).unwrap().program
    }

    fn half() -> Rational {
        BigRational::new(1.into(), 2.into())
    }

    #[test]
    fn skip_parses() {
        assert_eq!(prog("skip"), Program::Skip);
    }

    #[test]
    fn parallel_assignments() {
        assert_eq!(
            prog("x := 0 || x := 1"),
            Program::par(Program::assign("x", Expr::int(0)), Program::assign("x", Expr::int(1)))
        );
    }

    #[test]
    fn seq_binds_tighter_than_choice() {
        let a = Program::assign("a", Expr::int(0));
        let b = Program::assign("b", Expr::int(0));
        let c = Program::assign("c", Expr::int(0));
        assert_eq!(prog("a := 0 ; b := 0 + c := 0"), Program::nchoice(Program::seq(a.clone(), b.clone()), c.clone()));
        assert_eq!(prog("a := 0 ; b := 0 || c := 0"), Program::par(Program::seq(a.clone(), b.clone()), c.clone()));
        assert_eq!(
            prog("a := 0 || b := 0 +[1/2] c := 0"),
            Program::pchoice(half(), Program::par(a.clone(), b.clone()), c.clone())
        );
        assert_eq!(
            prog("a := 0 + b := 0 +[0.5] c := 0"),
            Program::pchoice(half(), Program::nchoice(a.clone(), b.clone()), c.clone())
        );
        assert_eq!(prog("a := 0 ; (b := 0 + c := 0)"), Program::seq(a, Program::nchoice(b, c)));
    }

    #[test]
    fn arithmetic_plus_versus_choice() {
        assert_eq!(
            prog("x := x + 1 + x := 2"),
            Program::nchoice(
                Program::assign("x", Expr::bin(BinOp::Add, Expr::var("x"), Expr::int(1))),
                Program::assign("x", Expr::int(2))
            )
        );
        assert_eq!(
            prog("x := 1 + (x) + skip"),
            Program::nchoice(
                Program::assign("x", Expr::bin(BinOp::Add, Expr::int(1), Expr::var("x"))),
                Program::Skip
            )
        );
        assert_eq!(prog("x := 1 + (x := 2)"), Program::nchoice(Program::assign("x", Expr::int(1)), Program::assign("x", Expr::int(2))));
    }

    #[test]
    fn header_checks_variables() {
        let f = parse_program("var x, y; x := y").unwrap();
        assert_eq!(f.header, Header::classical(&["x", "y"]));
        let err = parse_program("var x; y := 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownVariable);
        assert_eq!(err.span, SourceSpan::new(7, 8));
        let err = parse_program("var x; if z = 0 then { skip } else { skip }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownVariable);
    }

    #[test]
    fn undeclared_header_infers_vars() {
        let f = parse_program("y := 1; x :~ {1/2: 0, 1/2: y}").unwrap();
        assert_eq!(f.header, Header::Classical { vars: vec!["x".into(), "y".into()], declared: false });
    }

    #[test]
    fn random_assignment_weights() {
        let err = parse_program("x :~ {1/2: 0, 1/3: 1}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InvalidProbability);
        let err = parse_program("x :~ {0: 0, 1: 1}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InvalidProbability);
        let err = parse_program("skip +[3/2] skip").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InvalidProbability);
    }

    #[test]
    fn conditions_with_parens() {
        let f = parse_program("var x, y; while (x + 1) = 2 && !(y < -1 || x<-1) { skip }").unwrap();
        let Program::While(c, _) = f.program else { panic!() };
        assert_eq!(
            c,
            Condition::and(
                Condition::cmp(Expr::bin(BinOp::Add, Expr::var("x"), Expr::int(1)), CmpOp::Eq, Expr::int(2)),
                Condition::not(Condition::or(
                    Condition::cmp(Expr::var("y"), CmpOp::Lt, Expr::int(-1)),
                    Condition::cmp(Expr::var("x"), CmpOp::Lt, Expr::int(-1)),
                ))
            )
        );
    }

    #[test]
    fn quantum_atomics() {
        let f = parse_program("bits 2 qubits 2; H(q1); CNOT(q1, q2); M[x2 <- q2]; q1 <- |0>; if x2 = 1 then { X(q2) } else { skip }").unwrap();
        assert_eq!(f.header, Header::quantum(2, 2));
        let printed = pretty_print(&f.program);
        assert_eq!(printed, "H(q1); CNOT(q1, q2); M[x2 <- q2]; q1 <- |0>; if x2 = 1 then { X(q2) } else { skip }");
    }

    #[test]
    fn quantum_errors() {
        assert_eq!(parse_program("bits 1 qubits 1; FOO(q1)").unwrap_err().kind, ParseErrorKind::UnknownAtomic);
        assert_eq!(parse_program("bits 1 qubits 1; H(q2)").unwrap_err().kind, ParseErrorKind::UnknownVariable);
        assert_eq!(parse_program("bits 1 qubits 1; M[x3 <- q1]").unwrap_err().kind, ParseErrorKind::UnknownVariable);
        assert_eq!(parse_program("bits 1 qubits 2; CNOT(q1)").unwrap_err().kind, ParseErrorKind::Syntax);
        assert_eq!(parse_program("bits 1 qubits 2; CNOT(q1, q1)").unwrap_err().kind, ParseErrorKind::Syntax);
        assert_eq!(parse_program("H(q1)").unwrap_err().kind, ParseErrorKind::UnknownAtomic);
    }

    #[test]
    fn syntax_errors_are_located() {
        let err = parse_program("; skip").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!(err.span, SourceSpan::new(0, 1));
        let err = parse_program("skip skip").unwrap_err();
        assert_eq!(err.span, SourceSpan::new(5, 9));
        let err = parse_program("while x = 0 skip").unwrap_err();
        assert_eq!(err.span, SourceSpan::new(12, 16));
        assert!(err.render("while x = 0 skip").contains("^^^^"));
    }

    #[test]
    fn trailing_semicolons_are_tolerated() {
        assert_eq!(prog("skip;"), Program::Skip);
        assert_eq!(prog("while x = 0 { x := 1; }"), prog("while x = 0 { x := 1 }"));
    }
}
