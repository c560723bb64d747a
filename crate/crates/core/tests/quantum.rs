use num_complex::Complex64;
use pgcl::backend::quantum::rational_to_f64;
use pgcl::backend::{CQState, QuantumBackend};
use pgcl::extension::{Engine, EngineOptions};
use pgcl::logic::{parse_formula, semi_decide, Mode, Verdict};
use pgcl::oracle::det_outcomes;
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;
use pgcl::testing::random_cq_state;
use pgcl::valuation::{Rational, Valuation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Density = Vec<Vec<Complex64>>;

/// Density operator of the quantum part, classical bits ignored.
fn density(mu: &Valuation<CQState>) -> Density {
    let dim = mu.support().next().expect("nonempty").amps().len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (s, w) in mu.iter() {
        let w = rational_to_f64(w);
        let a = s.amps();
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell += a[r] * a[c].conj() * w;
            }
        }
    }
    out
}

fn distance(a: &Density, b: &Density) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn run_to_completion(b: &QuantumBackend, src: &str, s: CQState, depth: usize) -> Valuation<CQState> {
    let file = parse_program(src).unwrap();
    let c = Config::new(file.program, s);
    let mut engine = Engine::new(b, EngineOptions::default());
    let f = engine.gen_set(&c, depth).unwrap();
    assert_eq!(f.len(), 1, "deterministic program");
    let mu = f.iter().next().unwrap().clone();
    assert_eq!(mu.mass(), Rational::from_integer(1.into()));
    mu
}

#[test]
fn reset_equals_measure_then_correct() {
    let b = QuantumBackend::new(1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let s = random_cq_state(&mut rng, &b);
        for q in 1..=2 {
            let reset = run_to_completion(&b, &format!("bits 1 qubits 2;\nq{q} <- |0>"), s.clone(), 2);
            let corrected = run_to_completion(
                &b,
                &format!("bits 1 qubits 2;\nM[x1 <- q{q}]; if x1 = 1 then {{ X(q{q}) }} else {{ skip }}"),
                s.clone(),
                4,
            );
            let d = distance(&density(&reset), &density(&corrected));
            assert!(d < 1e-9, "qubit {q}: {d:e}");
        }
    }
}

#[test]
fn bell_pair_measurements_agree() {
    let b = QuantumBackend::new(2, 2);
    let src = "bits 2 qubits 2;\nH(q1); CNOT(q1, q2); (M[x1 <- q1] || M[x2 <- q2])";
    let file = parse_program(src).unwrap();
    let c = Config::new(file.program, b.zero_state());
    let phi = parse_formula("must P[x1 = 1 && x2 = 1] > 0.4 & P[x1 = 0 && x2 = 0] > 0.4", &file.header).unwrap();
    let mut engine = Engine::new(&b, EngineOptions::default());
    let verdict = semi_decide(&mut engine, &c, &phi, Mode::Upper, 8).unwrap().verdict;
    assert!(matches!(verdict, Verdict::Holds { .. }), "{verdict}");
    let anti = parse_formula("may P[x1 = 1 && x2 = 0] > 0", &file.header).unwrap();
    let verdict = semi_decide(&mut engine, &c, &anti, Mode::Lower, 8).unwrap().verdict;
    assert!(matches!(verdict, Verdict::Unknown { depth: 8, .. }));
}

#[test]
fn racing_measurement_outcomes_match_the_oracle() {
    let b = QuantumBackend::new(1, 1);
    let file = parse_program("bits 1 qubits 1;\nM[x1 <- q1] || (H(q1) + X(q1))").unwrap();
    let c = Config::new(file.program, b.zero_state());
    let mut engine = Engine::new(&b, EngineOptions { prune: false, ..Default::default() });
    for n in 1..=4 {
        let f = engine.gen_set(&c, n).unwrap();
        assert_eq!(*f.members(), det_outcomes(&c, &b, n, 100_000).unwrap(), "n = {n}");
    }
    let masses: Vec<Rational> =
        engine.gen_set(&c, 3).unwrap().iter().map(|mu| mu.measure(|s| s.bits()[0])).collect();
    for expected in [Rational::from_integer(0.into()), Rational::new(1.into(), 2.into()), Rational::from_integer(1.into())] {
        assert!(masses.contains(&expected), "{masses:?} lacks {expected}");
    }
}
