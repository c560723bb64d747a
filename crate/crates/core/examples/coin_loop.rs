//! Flip a fair coin until heads: the halting mass after n steps and the
//! depth at which each must-threshold is first certified.

use pgcl::backend::ClassicalBackend;
use pgcl::extension::{Engine, EngineOptions};
use pgcl::logic::{parse_formula, semi_decide, Mode};
use pgcl::oracle::det_outcomes;
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;

fn main() {
    let file = parse_program("var c;\nwhile c = 0 { c :~ {1/2: 0, 1/2: 1} }").unwrap();
    let b = ClassicalBackend::from_header(&file.header).unwrap();
    let c = Config::new(file.program, b.zero_store());

    for n in 1..=9 {
        let outs = det_outcomes(&c, &b, n, 1000).unwrap();
        let masses: Vec<String> = outs.iter().map(|mu| mu.mass().to_string()).collect();
        println!("n = {n}: halted mass {}", masses.join(", "));
    }
    for t in ["3/8", "11/16", "27/32", "59/64"] {
        let phi = parse_formula(&format!("must P[c = 1] > {t}"), &file.header).unwrap();
        let mut engine = Engine::new(&b, EngineOptions::default());
        println!("{phi}: {}", semi_decide(&mut engine, &c, &phi, Mode::Upper, 20).unwrap().verdict);
    }
}
