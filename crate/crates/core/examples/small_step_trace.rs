//! One round of the small-step relation: every transition valuation of a
//! configuration, printed in the debug trace format.

use pgcl::backend::ClassicalBackend;
use pgcl::smallstep::{step_traced, trace, Config};
use pgcl::syntax::parse_program;
use std::collections::BTreeSet;

fn main() {
    for src in [
        "var x;\nx := 1 || x := 2",
        "var x;\nx := 1 +[1/3] (x := 2 + x := 3)",
        "var x;\nwhile x = 0 { x :~ {1/2: 0, 1/2: 1} }",
        "var x, y;\n(x := 1; y := x) || x := 5",
    ] {
        let file = parse_program(src).unwrap();
        let b = ClassicalBackend::from_header(&file.header).unwrap();
        let c = Config::new(file.program, b.zero_store());
        for line in trace(&c, &b).unwrap() {
            println!("{line}");
        }
        let mut rules = BTreeSet::new();
        step_traced(&c, &b, &mut rules).unwrap();
        println!("  rules: {rules:?}\n");
    }
}
