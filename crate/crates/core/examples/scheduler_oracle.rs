//! Outcomes of deterministic schedulers, and a randomized scheduler whose
//! outcome lies in their convex hull.

use pgcl::backend::ClassicalBackend;
use pgcl::extension::{conv_member, Engine, EngineOptions};
use pgcl::oracle::{evaluate, random_scheduler, DetEnumerator, History};
use pgcl::smallstep::Config;
use pgcl::syntax::parse_program;
use rand::SeedableRng;

fn main() {
    let file = parse_program("var x, y;\n(x := 1 || x := 2); y :~ {1/2: 0, 1/2: x}").unwrap();
    let b = ClassicalBackend::from_header(&file.header).unwrap();
    let c = Config::new(file.program, b.zero_store());
    let n = 4;

    let mut det = DetEnumerator::new(&b, 10_000);
    let witnesses = det.witnesses(&c, n).unwrap();
    println!("{} deterministic outcomes after {n} steps:", witnesses.len());
    for w in &witnesses {
        println!("  {}", w.outcome.to_json(|s| pgcl::backend::Backend::state_json(&b, s)));
    }

    let mut engine = Engine::new(&b, EngineOptions::default());
    let f = engine.gen_set(&c, n).unwrap();
    let gens: Vec<_> = f.iter().collect();
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    for _ in 0..3 {
        let sch = random_scheduler(&c, &b, n, &mut rng).unwrap();
        let mu = evaluate(&sch, &b, &History::start(c.clone()), n).unwrap().expect("defined to depth n");
        println!("randomized scheduler: {}", mu.to_json(|s| pgcl::backend::Backend::state_json(&b, s)));
        println!("  a generator: {}, inside conv F_{n}: {}", f.contains(&mu), conv_member(&mu, &gens));
    }
}
