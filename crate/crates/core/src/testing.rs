//! Seeded random generators for programs and quantum states, shared by the
//! property tests, the acceptance suite and the examples.

use num_complex::Complex64;
use rand::Rng;

use crate::backend::{CQState, QuantumBackend};
use crate::syntax::{Atomic, CmpOp, Condition, Expr, Program};
use crate::valuation::Rational;

/// Shape constraints for generated classical programs. Values stay in
/// `0..=max_value` because every assignment picks a constant, a variable or
/// a coin over constants.
#[derive(Clone, Debug)]
pub struct ProgramShape {
    pub vars: Vec<String>,
    pub max_value: i64,
    /// Maximum AST depth, counting a leaf as 1.
    pub max_depth: usize,
    pub allow_while: bool,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape { vars: vec!["x".into(), "y".into(), "z".into()], max_value: 2, max_depth: 4, allow_while: true }
    }
}

/// Root operator to force, so a corpus can guarantee operator coverage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Root {
    Any,
    Par,
    PChoice,
    NChoice,
}

pub fn random_program<R: Rng>(rng: &mut R, shape: &ProgramShape, root: Root) -> Program {
    let d = shape.max_depth;
    match root {
        Root::Any => program(rng, shape, d),
        Root::Par => Program::par(program(rng, shape, d - 1), program(rng, shape, d - 1)),
        Root::PChoice => Program::pchoice(random_prob(rng), program(rng, shape, d - 1), program(rng, shape, d - 1)),
        Root::NChoice => Program::nchoice(program(rng, shape, d - 1), program(rng, shape, d - 1)),
    }
}

fn program<R: Rng>(rng: &mut R, shape: &ProgramShape, depth: usize) -> Program {
    if depth <= 1 || rng.gen_bool(0.15) {
        return leaf(rng, shape);
    }
    let sub = |rng: &mut R| program(rng, shape, depth - 1);
    match rng.gen_range(0..7) {
        0 | 1 => {
            let p = sub(rng);
            Program::seq(p, sub(rng))
        }
        2 => {
            let p = sub(rng);
            Program::par(p, sub(rng))
        }
        3 => {
            let prob = random_prob(rng);
            let p = sub(rng);
            Program::pchoice(prob, p, sub(rng))
        }
        4 => {
            let p = sub(rng);
            Program::nchoice(p, sub(rng))
        }
        5 => {
            let c = condition(rng, shape);
            let p = sub(rng);
            Program::if_then_else(c, p, sub(rng))
        }
        _ if shape.allow_while && depth >= 3 => {
            // Guard on a variable the body overwrites with a constant, so
            // loops usually exit after one or two iterations.
            let var = pick_var(rng, shape);
            let exit = rng.gen_range(0..=shape.max_value);
            let body = Program::seq(program(rng, shape, depth - 2), Program::assign(&var, Expr::int(exit)));
            let guard = Condition::cmp(Expr::var(&var), CmpOp::Ne, Expr::int(exit));
            Program::while_loop(guard, body)
        }
        _ => leaf(rng, shape),
    }
}

fn leaf<R: Rng>(rng: &mut R, shape: &ProgramShape) -> Program {
    let var = pick_var(rng, shape);
    match rng.gen_range(0..8) {
        0 => Program::Skip,
        1 | 2 => Program::assign(&var, Expr::int(rng.gen_range(0..=shape.max_value))),
        3 | 4 => Program::assign(&var, Expr::var(&pick_var(rng, shape))),
        _ => {
            let a = rng.gen_range(0..=shape.max_value);
            let b = rng.gen_range(0..=shape.max_value);
            let p = random_prob(rng);
            let q = Rational::from_integer(1.into()) - &p;
            Program::Atomic(Atomic::RandAssign { var, branches: vec![(p, Expr::int(a)), (q, Expr::int(b))] })
        }
    }
}

fn pick_var<R: Rng>(rng: &mut R, shape: &ProgramShape) -> String {
    shape.vars[rng.gen_range(0..shape.vars.len())].clone()
}

fn condition<R: Rng>(rng: &mut R, shape: &ProgramShape) -> Condition {
    let var = pick_var(rng, shape);
    let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le][rng.gen_range(0..4)];
    let rhs = if rng.gen_bool(0.7) {
        Expr::int(rng.gen_range(0..=shape.max_value))
    } else {
        Expr::var(&pick_var(rng, shape))
    };
    Condition::cmp(Expr::var(&var), op, rhs)
}

/// A probability in `{1/4, 1/3, 1/2, 2/3, 3/4}`.
pub fn random_prob<R: Rng>(rng: &mut R) -> Rational {
    let (n, d) = [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)][rng.gen_range(0..5)];
    Rational::new(n.into(), d.into())
}

/// `count` programs, a third each rooted at `||` and `+[p]`.
pub fn corpus<R: Rng>(rng: &mut R, shape: &ProgramShape, count: usize) -> Vec<Program> {
    (0..count)
        .map(|i| {
            let root = match i % 3 {
                0 => Root::Par,
                1 => Root::PChoice,
                _ => Root::Any,
            };
            random_program(rng, shape, root)
        })
        .collect()
}

/// Random amplitudes: independent uniform real and imaginary parts,
/// normalized.
pub fn random_amplitudes<R: Rng>(rng: &mut R, qubits: usize) -> Vec<Complex64> {
    loop {
        let raw: Vec<Complex64> =
            (0..1usize << qubits).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return raw.into_iter().map(|a| a / norm).collect();
        }
    }
}

pub fn random_cq_state<R: Rng>(rng: &mut R, backend: &QuantumBackend) -> CQState {
    let bits = (0..backend.num_bits()).map(|_| rng.gen_bool(0.5)).collect();
    let amps = random_amplitudes(rng, backend.num_qubits());
    backend.state(bits, amps).expect("normalized random state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, pretty_print};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn corpus_meets_its_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shape = ProgramShape::default();
        let progs = corpus(&mut rng, &shape, 30);
        let has = |p: &Program, f: fn(&Program) -> bool| p.contains(&f);
        assert!(progs.iter().filter(|p| has(p, |q| matches!(q, Program::Par(..)))).count() >= 10);
        assert!(progs.iter().filter(|p| has(p, |q| matches!(q, Program::PChoice(..)))).count() >= 10);
        for p in &progs {
            assert!(p.depth() <= 4, "{p}");
            assert!(p.variables().len() <= 3);
            assert_eq!(parse_program(&pretty_print(p)).unwrap().program, *p);
        }
    }
}
