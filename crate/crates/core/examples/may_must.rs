//! Semi-deciding may/must properties in the three modes.

use pgcl::backend::ClassicalBackend;
use pgcl::extension::{Engine, EngineOptions};
use pgcl::logic::{parse_formula, semi_decide, Mode};
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;

fn main() {
    let file = parse_program("var x, y;\n(x := 1 + x := 2) || y :~ {1/4: 1, 3/4: 0}").unwrap();
    let b = ClassicalBackend::from_header(&file.header).unwrap();
    let c = Config::new(file.program, b.zero_store());
    let queries = [
        ("may P[x = 2] > 1/2", Mode::Lower),
        ("may P[x = 2 && y = 1] > 0.2", Mode::Lower),
        ("must P[y = 0] > 1/2", Mode::Upper),
        ("must P[x = 1] > 1/2", Mode::Upper),
        ("may P[x = 1] > 0 and must P[x != 0] > 0.9", Mode::Biconvex),
        ("must P[x = 1] > 0 | P[x = 2] > 0", Mode::Biconvex),
    ];
    for (text, mode) in queries {
        let phi = parse_formula(text, &file.header).unwrap();
        let mut engine = Engine::new(&b, EngineOptions::default());
        match semi_decide(&mut engine, &c, &phi, mode, 6) {
            Ok(d) => println!("[{}] {phi}: {}", mode.letter(), d.verdict),
            Err(e) => println!("[{}] {phi}: {e}", mode.letter()),
        }
    }
}
