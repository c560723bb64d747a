//! Abstract syntax of concurrent pGCL and its concrete text form.
//!
//! Binding strength, tightest first: `;`, `||`, then the two choice
//! operators `+[p]` and `+`. All binary operators associate to the left and
//! parentheses override.

mod lexer;
mod parser;
mod printer;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_condition, parse_program, parse_program_with, ParseOptions};
pub(crate) use parser::Parser;
pub use printer::{pretty_print, render_condition, render_expr, render_rational};

pub type Rational = BigRational;

/// Byte range into the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }

    pub fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnknownAtomic,
    UnknownVariable,
    InvalidProbability,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{message} at {span}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError { kind, span, message: message.into() }
    }

    /// Renders the error with the offending line of `source` underneath.
    pub fn render(&self, source: &str) -> String {
        let start = self.span.start.min(source.len());
        let line_start = source[..start].rfind('\n').map_or(0, |i| i + 1);
        let line_end = source[start..].find('\n').map_or(source.len(), |i| start + i);
        let line_no = source[..start].matches('\n').count() + 1;
        let col = source[line_start..start].chars().count();
        let width = source[start..self.span.end.min(line_end).max(start)].chars().count().max(1);
        format!(
            "error: {}\n --> line {}, column {}\n  | {}\n  | {}{}",
            self.message,
            line_no,
            col + 1,
            &source[line_start..line_end],
            " ".repeat(col),
            "^".repeat(width)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Integer expression of the classical backend.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(BigInt),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Const(BigInt::from(v))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Boolean condition. `Cmp` is the classical atom, `Bit` the quantum one
/// (`x_i = 0` / `x_i = 1`, bits numbered from 1).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    True,
    False,
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Cmp(Expr, CmpOp, Expr),
    Bit { bit: usize, value: bool },
}

impl Condition {
    pub fn cmp(l: Expr, op: CmpOp, r: Expr) -> Condition {
        Condition::Cmp(l, op, r)
    }

    pub fn and(l: Condition, r: Condition) -> Condition {
        Condition::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Condition, r: Condition) -> Condition {
        Condition::Or(Box::new(l), Box::new(r))
    }

    pub fn not(c: Condition) -> Condition {
        Condition::Not(Box::new(c))
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Condition::True | Condition::False | Condition::Bit { .. } => {}
            Condition::Not(c) => c.collect_vars(out),
            Condition::And(l, r) | Condition::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Condition::Cmp(l, _, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

/// Atomic programs of both backends. Qubit and bit indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atomic {
    Assign { var: String, expr: Expr },
    RandAssign { var: String, branches: Vec<(Rational, Expr)> },
    Gate { name: String, qubits: Vec<usize> },
    Reset { qubit: usize },
    Measure { bit: usize, qubit: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Program {
    Skip,
    Atomic(Atomic),
    Seq(Arc<Program>, Arc<Program>),
    Par(Arc<Program>, Arc<Program>),
    PChoice(Rational, Arc<Program>, Arc<Program>),
    NChoice(Arc<Program>, Arc<Program>),
    If(Condition, Arc<Program>, Arc<Program>),
    While(Condition, Arc<Program>),
}

impl Program {
    pub fn atomic(a: Atomic) -> Program {
        Program::Atomic(a)
    }

    pub fn assign(var: &str, expr: Expr) -> Program {
        Program::Atomic(Atomic::Assign { var: var.to_string(), expr })
    }

    pub fn seq(p: Program, q: Program) -> Program {
        Program::Seq(Arc::new(p), Arc::new(q))
    }

    pub fn par(p: Program, q: Program) -> Program {
        Program::Par(Arc::new(p), Arc::new(q))
    }

    pub fn pchoice(prob: Rational, p: Program, q: Program) -> Program {
        Program::PChoice(prob, Arc::new(p), Arc::new(q))
    }

    pub fn nchoice(p: Program, q: Program) -> Program {
        Program::NChoice(Arc::new(p), Arc::new(q))
    }

    pub fn if_then_else(c: Condition, p: Program, q: Program) -> Program {
        Program::If(c, Arc::new(p), Arc::new(q))
    }

    pub fn while_loop(c: Condition, body: Program) -> Program {
        Program::While(c, Arc::new(body))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Program::Skip | Program::Atomic(_) => 1,
            Program::Seq(p, q) | Program::Par(p, q) | Program::NChoice(p, q) => 1 + p.size() + q.size(),
            Program::PChoice(_, p, q) | Program::If(_, p, q) => 1 + p.size() + q.size(),
            Program::While(_, p) => 1 + p.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Program::Skip | Program::Atomic(_) => 1,
            Program::Seq(p, q) | Program::Par(p, q) | Program::NChoice(p, q) => 1 + p.depth().max(q.depth()),
            Program::PChoice(_, p, q) | Program::If(_, p, q) => 1 + p.depth().max(q.depth()),
            Program::While(_, p) => 1 + p.depth(),
        }
    }

    pub fn contains(&self, pred: &dyn Fn(&Program) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Program::Skip | Program::Atomic(_) => false,
            Program::Seq(p, q) | Program::Par(p, q) | Program::NChoice(p, q) => p.contains(pred) || q.contains(pred),
            Program::PChoice(_, p, q) | Program::If(_, p, q) => p.contains(pred) || q.contains(pred),
            Program::While(_, p) => p.contains(pred),
        }
    }

    /// Classical variable names mentioned anywhere in the program.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Program::Skip => {}
            Program::Atomic(Atomic::Assign { var, expr }) => {
                out.insert(var.clone());
                expr.collect_vars(out);
            }
            Program::Atomic(Atomic::RandAssign { var, branches }) => {
                out.insert(var.clone());
                for (_, e) in branches {
                    e.collect_vars(out);
                }
            }
            Program::Atomic(_) => {}
            Program::Seq(p, q) | Program::Par(p, q) | Program::NChoice(p, q) | Program::PChoice(_, p, q) => {
                p.collect_vars(out);
                q.collect_vars(out);
            }
            Program::If(c, p, q) => {
                c.collect_vars(out);
                p.collect_vars(out);
                q.collect_vars(out);
            }
            Program::While(c, p) => {
                c.collect_vars(out);
                p.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

/// Program file header: which backend the program targets and its state shape.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Header {
    /// Classical store. `declared` is false when the file had no `var` line,
    /// in which case the variables are taken from the program text.
    Classical { vars: Vec<String>, declared: bool },
    Quantum { bits: usize, qubits: usize },
}

impl Header {
    pub fn classical<S: AsRef<str>>(vars: &[S]) -> Header {
        let mut vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        vars.sort();
        vars.dedup();
        Header::Classical { vars, declared: true }
    }

    pub fn quantum(bits: usize, qubits: usize) -> Header {
        Header::Quantum { bits, qubits }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, Header::Quantum { .. })
    }
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Header::Classical { vars, declared } => {
                if *declared && !vars.is_empty() {
                    write!(f, "var {};", vars.join(", "))
                } else {
                    Ok(())
                }
            }
            Header::Quantum { bits, qubits } => write!(f, "bits {bits} qubits {qubits};"),
        }
    }
}

/// A parsed program file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramFile {
    pub header: Header,
    pub program: Program,
}

impl fmt::Display for ProgramFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = self.header.to_string();
        if header.is_empty() {
            write!(f, "{}", self.program)
        } else {
            write!(f, "{header}\n{}", self.program)
        }
    }
}

/// Built-in gate names with their arity.
pub const BUILTIN_GATES: &[(&str, usize)] = &[
    ("I", 1),
    ("X", 1),
    ("Y", 1),
    ("Z", 1),
    ("H", 1),
    ("S", 1),
    ("T", 1),
    ("CNOT", 2),
    ("CZ", 2),
    ("SWAP", 2),
];
