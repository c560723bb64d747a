use num::BigRational;

use super::{Atomic, BinOp, CmpOp, Condition, Expr, Program};

/// Renders a rational as `n` or `n/d`.
pub fn render_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders `p` with the minimal parentheses that reparse to the same tree.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    write_program(p, &mut out);
    out
}

// Levels: 0 choice, 1 parallel, 2 sequence, 3 unit.
fn level(p: &Program) -> u8 {
    match p {
        Program::PChoice(..) | Program::NChoice(..) => 0,
        Program::Par(..) => 1,
        Program::Seq(..) => 2,
        _ => 3,
    }
}

fn write_operand(p: &Program, min: u8, out: &mut String) {
    if level(p) < min {
        out.push('(');
        write_program(p, out);
        out.push(')');
    } else {
        write_program(p, out);
    }
}

fn write_program(p: &Program, out: &mut String) {
    match p {
        Program::Skip => out.push_str("skip"),
        Program::Atomic(a) => write_atomic(a, out),
        Program::Seq(l, r) => {
            write_operand(l, 2, out);
            out.push_str("; ");
            write_operand(r, 3, out);
        }
        Program::Par(l, r) => {
            write_operand(l, 1, out);
            out.push_str(" || ");
            write_operand(r, 2, out);
        }
        Program::NChoice(l, r) => {
            write_operand(l, 0, out);
            out.push_str(" + ");
            write_operand(r, 1, out);
        }
        Program::PChoice(prob, l, r) => {
            write_operand(l, 0, out);
            out.push_str(&format!(" +[{}] ", render_rational(prob)));
            write_operand(r, 1, out);
        }
        Program::If(c, l, r) => {
            out.push_str("if ");
            out.push_str(&render_condition(c));
            out.push_str(" then { ");
            write_program(l, out);
            out.push_str(" } else { ");
            write_program(r, out);
            out.push_str(" }");
        }
        Program::While(c, body) => {
            out.push_str("while ");
            out.push_str(&render_condition(c));
            out.push_str(" { ");
            write_program(body, out);
            out.push_str(" }");
        }
    }
}

fn write_atomic(a: &Atomic, out: &mut String) {
    match a {
        Atomic::Assign { var, expr } => {
            out.push_str(&format!("{var} := {}", render_expr(expr)));
        }
        Atomic::RandAssign { var, branches } => {
            let parts: Vec<String> =
                branches.iter().map(|(w, e)| format!("{}: {}", render_rational(w), render_expr(e))).collect();
            out.push_str(&format!("{var} :~ {{{}}}", parts.join(", ")));
        }
        Atomic::Gate { name, qubits } => {
            let qs: Vec<String> = qubits.iter().map(|q| format!("q{q}")).collect();
            out.push_str(&format!("{name}({})", qs.join(", ")));
        }
        Atomic::Reset { qubit } => out.push_str(&format!("q{qubit} <- |0>")),
        Atomic::Measure { bit, qubit } => out.push_str(&format!("M[x{bit} <- q{qubit}]")),
    }
}

fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
        _ => 2,
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_expr_operand(e: &Expr, min: u8, out: &mut String) {
    if expr_level(e) < min {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => out.push_str(&c.to_string()),
        Expr::Var(v) => out.push_str(v),
        Expr::Neg(inner) => {
            out.push_str("-(");
            write_expr(inner, out);
            out.push(')');
        }
        Expr::Bin(op, l, r) => {
            let (sym, lvl) = match op {
                BinOp::Add => ("+", 0),
                BinOp::Sub => ("-", 0),
                BinOp::Mul => ("*", 1),
                BinOp::Div => ("/", 1),
            };
            write_expr_operand(l, lvl, out);
            out.push_str(&format!(" {sym} "));
            write_expr_operand(r, lvl + 1, out);
        }
    }
}

fn cond_level(c: &Condition) -> u8 {
    match c {
        Condition::Or(..) => 0,
        Condition::And(..) => 1,
        _ => 2,
    }
}

pub fn render_condition(c: &Condition) -> String {
    let mut out = String::new();
    write_cond(c, &mut out);
    out
}

fn write_cond_operand(c: &Condition, min: u8, out: &mut String) {
    if cond_level(c) < min {
        out.push('(');
        write_cond(c, out);
        out.push(')');
    } else {
        write_cond(c, out);
    }
}

fn write_cond(c: &Condition, out: &mut String) {
    match c {
        Condition::True => out.push_str("true"),
        Condition::False => out.push_str("false"),
        Condition::Not(inner) => {
            out.push('!');
            write_cond_operand(inner, 2, out);
        }
        Condition::And(l, r) => {
            write_cond_operand(l, 1, out);
            out.push_str(" && ");
            write_cond_operand(r, 2, out);
        }
        Condition::Or(l, r) => {
            write_cond_operand(l, 0, out);
            out.push_str(" || ");
            write_cond_operand(r, 1, out);
        }
        Condition::Cmp(l, op, r) => {
            let sym = match op {
                CmpOp::Eq => "=",
                CmpOp::Ne => "!=",
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
            };
            out.push_str(&format!("{} {sym} {}", render_expr(l), render_expr(r)));
        }
        Condition::Bit { bit, value } => out.push_str(&format!("x{bit} = {}", u8::from(*value))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Header};
    use num::BigInt;
    use proptest::prelude::*;

    #[test]
    fn basic_renderings() {
        assert_eq!(pretty_print(&Program::Skip), "skip");
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(pretty_print(&Program::pchoice(half, Program::Skip, Program::Skip)), "skip +[1/2] skip");
        assert_eq!(pretty_print(&Program::par(Program::Skip, Program::Skip)), "skip || skip");
        assert_eq!(
            pretty_print(&Program::seq(Program::Skip, Program::seq(Program::Skip, Program::Skip))),
            "skip; (skip; skip)"
        );
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-3i64..4).prop_map(|v| Expr::Const(BigInt::from(v))),
            prop::sample::select(vec!["x", "y", "z"]).prop_map(Expr::var),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, l, r)| Expr::bin(op, l, r)),
            ]
        })
    }

    fn arb_cond() -> impl Strategy<Value = Condition> {
        let cmp = prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
        let leaf = prop_oneof![
            Just(Condition::True),
            Just(Condition::False),
            (arb_expr(), cmp, arb_expr()).prop_map(|(l, op, r)| Condition::Cmp(l, op, r)),
        ];
        leaf.prop_recursive(3, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Condition::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Condition::and(l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| Condition::or(l, r)),
            ]
        })
    }

    fn arb_prob() -> impl Strategy<Value = BigRational> {
        (0i64..=8, 1i64..=8).prop_filter_map("p in [0,1]", |(n, d)| {
            (n <= d).then(|| BigRational::new(n.into(), d.into()))
        })
    }

    fn arb_program() -> impl Strategy<Value = Program> {
        let leaf = prop_oneof![
            Just(Program::Skip),
            (prop::sample::select(vec!["x", "y", "z"]), arb_expr()).prop_map(|(v, e)| Program::assign(v, e)),
            (prop::sample::select(vec!["x", "y"]), arb_expr(), arb_expr()).prop_map(|(v, a, b)| {
                let half = BigRational::new(1.into(), 2.into());
                Program::Atomic(Atomic::RandAssign { var: v.to_string(), branches: vec![(half.clone(), a), (half, b)] })
            }),
        ];
        leaf.prop_recursive(6, 40, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(p, q)| Program::seq(p, q)),
                (inner.clone(), inner.clone()).prop_map(|(p, q)| Program::par(p, q)),
                (arb_prob(), inner.clone(), inner.clone()).prop_map(|(r, p, q)| Program::pchoice(r, p, q)),
                (inner.clone(), inner.clone()).prop_map(|(p, q)| Program::nchoice(p, q)),
                (arb_cond(), inner.clone(), inner.clone()).prop_map(|(c, p, q)| Program::if_then_else(c, p, q)),
                (arb_cond(), inner).prop_map(|(c, p)| Program::while_loop(c, p)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in arb_program()) {
            let text = pretty_print(&p);
            let parsed = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(parsed.program, p);
        }

        #[test]
        fn round_trip_with_declared_header(p in arb_program()) {
            let file = crate::syntax::ProgramFile { header: Header::classical(&["x", "y", "z"]), program: p };
            let parsed = parse_program(&file.to_string()).unwrap();
            prop_assert_eq!(parsed, file);
        }

        #[test]
        fn parser_is_total_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse_program(&text);
        }

        #[test]
        fn parser_is_total_on_token_soup(words in prop::collection::vec(
            prop::sample::select(vec!["skip", "x", ":=", ":~", "1", "/", "2", "+", "+[", "]", ";", "||", "(", ")",
                "{", "}", "if", "then", "else", "while", "=", "<", "&&", "!", "-", "|0>", "M[", "<-", "H(", "q1"]),
            0..24,
        )) {
            let text = words.join(" ");
            if let Err(e) = parse_program(&text) {
                prop_assert!(e.span.start <= e.span.end && e.span.end <= text.len());
            }
        }
    }
}
