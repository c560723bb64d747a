//! Finite generating sets F_n, with and without extreme-point pruning.

use pgcl::backend::{Backend, ClassicalBackend};
use pgcl::extension::{level_sizes, Engine, EngineOptions};
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;

fn main() {
    let src = "var x;\n(x := 0 + x := 1) +[1/2] (x := 0 + x := 1)";
    let file = parse_program(src).unwrap();
    let b = ClassicalBackend::from_header(&file.header).unwrap();
    let c = Config::new(file.program, b.zero_store());

    for prune in [false, true] {
        let mut engine = Engine::new(&b, EngineOptions { prune, ..Default::default() });
        let sizes = level_sizes(&mut engine, &c, 3).unwrap();
        println!("prune = {prune}: (raw, kept) per depth {sizes:?}");
        let f = engine.gen_set(&c, 1).unwrap();
        println!("F_1 = {}", f.to_json(|s| b.state_json(s)));
    }
}
