//! Measurement and reset on the classical-quantum backend, and a race
//! between a measurement and a gate.

use num_complex::Complex64;
use pgcl::backend::{Backend, QuantumBackend};
use pgcl::extension::{Engine, EngineOptions};
use pgcl::logic::{parse_formula, semi_decide, Mode};
use pgcl::oracle::det_outcomes;
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;

fn main() {
    let b = QuantumBackend::new(1, 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = b.state(vec![false], vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap();

    let m = b.interp_measure(1, 1, &plus).unwrap();
    println!("M[x1 <- q1] on |+>: {}", m.to_json(|s| b.state_json(s)));
    let r = b.interp_reset(1, &plus).unwrap();
    println!("q1 <- |0> on |+>:   {}", r.to_json(|s| b.state_json(s)));

    let file = parse_program("bits 1 qubits 1;\n(M[x1 <- q1]) || X(q1)").unwrap();
    let c = Config::new(file.program, plus);
    let phi = parse_formula("may P[x1 = 1] > 1/4", &file.header).unwrap();
    let mut engine = Engine::new(&b, EngineOptions::default());
    println!("{phi}: {}", semi_decide(&mut engine, &c, &phi, Mode::Biconvex, 4).unwrap().verdict);
    for mu in det_outcomes(&c, &b, 2, 1000).unwrap() {
        println!("  scheduler outcome: {}", mu.to_json(|s| b.state_json(s)));
    }
}
