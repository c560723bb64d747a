//! Depth-bounded refinement in the lower, upper and biconvex orders.

use pgcl::backend::ClassicalBackend;
use pgcl::extension::{Engine, EngineOptions};
use pgcl::logic::{refines, Mode};
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;

fn main() {
    let b = ClassicalBackend::new(&["x", "y"]);
    let cfg = |src: &str| Config::new(parse_program(&format!("var x, y;\n{src}")).unwrap().program, b.zero_store());
    let pairs = [
        ("x := 0", "x := 0 + x := 1"),
        ("x := 0 + x := 1", "x := 0"),
        ("x := 1 +[1/3] (y := 1 + y := 2)", "(x := 1 +[1/3] y := 1) + (x := 1 +[1/3] y := 2)"),
        ("x := 1 +[1/2] x := 2", "x := 1 + x := 2"),
    ];
    let mut engine = Engine::new(&b, EngineOptions::default());
    for (p, q) in pairs {
        let verdicts: Vec<String> = [Mode::Lower, Mode::Upper, Mode::Biconvex]
            .into_iter()
            .map(|m| format!("{}: {}", m.letter(), refines(&mut engine, &cfg(p), &cfg(q), m, 3).unwrap()))
            .collect();
        println!("{p}  <=  {q}\n    {}", verdicts.join("  "));
    }
}
