use std::collections::BTreeSet;

use pgcl::backend::{ClassicalBackend, Store};
use pgcl::extension::{order_leq, Engine, EngineOptions, Order};
use pgcl::logic::{semi_decide, Formula, Inner, Mode, Verdict};
use pgcl::oracle::{det_outcomes, evaluate, random_scheduler, History, Scheduler, TreeScheduler};
use pgcl::smallstep::{step, step_traced, Config, Rule};
use pgcl::syntax::{parse_program, CmpOp, Condition, Expr, Program};
use pgcl::testing::{corpus, random_program, ProgramShape, Root};
use pgcl::valuation::{Outcome, Rational, Valuation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

fn backend() -> ClassicalBackend {
    ClassicalBackend::new(&VARS)
}

fn one() -> Rational {
    Rational::from_integer(1.into())
}

fn program_from_seed(seed: u64, root: Root) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_program(&mut rng, &ProgramShape::default(), root)
}

/// Every configuration reachable from `c` within `n` steps, `c` included.
fn reachable_configs(c: &Config<Store>, b: &ClassicalBackend, n: usize) -> BTreeSet<Config<Store>> {
    let mut seen = BTreeSet::from([c.clone()]);
    let mut frontier = vec![c.clone()];
    for _ in 0..n {
        let mut next = Vec::new();
        for cfg in &frontier {
            for mu in step(cfg, b).unwrap() {
                for o in mu.support() {
                    if let Outcome::Resume(p, s) = o {
                        let d = Config::new(p.clone(), s.clone());
                        if seen.insert(d.clone()) {
                            next.push(d);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    seen
}

#[test]
fn every_rule_is_exercised_by_the_corpus() {
    let b = backend();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut used = BTreeSet::new();
    for p in corpus(&mut rng, &ProgramShape::default(), 36) {
        for cfg in reachable_configs(&Config::new(p, b.zero_store()), &b, 6) {
            step_traced(&cfg, &b, &mut used).unwrap();
        }
    }
    let missing: Vec<Rule> = Rule::ALL.into_iter().filter(|r| !used.contains(r)).collect();
    assert!(missing.is_empty(), "rules never used: {missing:?}");
}

#[test]
fn step_sets_are_finite_and_total_on_the_corpus() {
    let b = backend();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut largest = 0;
    for p in corpus(&mut rng, &ProgramShape::default(), 36) {
        for cfg in reachable_configs(&Config::new(p, b.zero_store()), &b, 6) {
            let set = step(&cfg, &b).unwrap();
            largest = largest.max(set.len());
            assert!(set.iter().all(|mu| mu.mass() == one()), "{}", cfg.program);
        }
    }
    assert!(largest < 1000, "step set of size {largest}");
}

fn halting_mass_eq(mu: &Valuation<Store>, idx: usize, v: i64) -> Rational {
    mu.measure(|s| s.values()[idx] == v.into())
}

#[test]
fn must_verdicts_match_the_oracle_on_halting_programs() {
    let b = backend();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for p in corpus(&mut rng, &ProgramShape::default(), 36) {
        let c = Config::new(p.clone(), b.zero_store());
        let by_depth: Vec<_> = (1..=6).map(|n| det_outcomes(&c, &b, n, 500_000).unwrap()).collect();
        if !by_depth[5].iter().all(|mu| mu.mass() == one()) {
            continue;
        }
        for (idx, var) in VARS.iter().enumerate() {
            for v in 0..=2 {
                for t in [Rational::from_integer(0.into()), Rational::new(1.into(), 2.into())] {
                    let expected = by_depth
                        .iter()
                        .position(|set| set.iter().all(|mu| halting_mass_eq(mu, idx, v) > t))
                        .map(|i| i + 1);
                    let cond = Condition::cmp(Expr::var(var), CmpOp::Eq, Expr::int(v));
                    let phi = Formula::Must(Inner::Threshold(cond, t.clone()));
                    let mut engine = Engine::new(&b, EngineOptions::default());
                    let got = match semi_decide(&mut engine, &c, &phi, Mode::Upper, 6).unwrap().verdict {
                        Verdict::Holds { depth } => Some(depth),
                        Verdict::Unknown { .. } => None,
                    };
                    assert_eq!(got, expected, "{p}: must P[{var} = {v}] > {t}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn rejected_schedulers_block_instead_of_truncating() {
    let b = backend();
    let c = Config::new(parse_program("var x, y, z;\nx := 1; y := 2").unwrap().program, b.zero_store());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sch = random_scheduler(&c, &b, 1, &mut rng).unwrap();
    assert!(evaluate(&sch, &b, &History::start(c.clone()), 1).unwrap().is_some());
    assert_eq!(evaluate(&sch, &b, &History::start(c.clone()), 2).unwrap(), None);
    assert_eq!(evaluate(&TreeScheduler::empty(), &b, &History::start(c), 1).unwrap(), None);
}

/// Picks the first transition everywhere: always defined.
struct First;

impl Scheduler<Store> for First {
    fn choose(&self, _: &History<Store>, _: &BTreeSet<Valuation<Outcome<Store>>>) -> Option<Vec<(usize, Rational)>> {
        Some(vec![(0, one())])
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gen_sets_equal_deterministic_outcomes(seed in any::<u64>(), root in prop_oneof![Just(Root::Par), Just(Root::PChoice), Just(Root::NChoice), Just(Root::Any)]) {
        let b = backend();
        let c = Config::new(program_from_seed(seed, root), b.zero_store());
        let mut engine = Engine::new(&b, EngineOptions { prune: false, ..Default::default() });
        for n in 0..=4 {
            let f = engine.gen_set(&c, n).unwrap();
            prop_assert_eq!(f.members(), &det_outcomes(&c, &b, n, 200_000).unwrap());
        }
    }

    #[test]
    fn approximants_increase_and_have_mass_at_most_one(seed in any::<u64>()) {
        let b = backend();
        let c = Config::new(program_from_seed(seed, Root::Any), b.zero_store());
        let mut engine = Engine::new(&b, EngineOptions::default());
        let sets: Vec<_> = (0..=5).map(|n| engine.gen_set(&c, n).unwrap()).collect();
        for w in sets.windows(2) {
            prop_assert!(order_leq(&w[0], &w[1], Order::Lower));
        }
        for f in &sets {
            prop_assert!(f.iter().all(|mu| mu.mass() <= one()));
        }
    }

    #[test]
    fn pchoice_and_nchoice_step_cardinalities(seed in any::<u64>()) {
        let b = backend();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = ProgramShape { max_depth: 3, ..Default::default() };
        let p = random_program(&mut rng, &shape, Root::Any);
        let q = random_program(&mut rng, &shape, Root::Any);
        let s = b.zero_store();
        let sp = step(&Config::new(p.clone(), s.clone()), &b).unwrap().len();
        let sq = step(&Config::new(q.clone(), s.clone()), &b).unwrap().len();
        let mix = step(&Config::new(Program::pchoice(Rational::new(1.into(), 3.into()), p.clone(), q.clone()), s.clone()), &b).unwrap();
        let choice = step(&Config::new(Program::nchoice(p, q), s), &b).unwrap();
        prop_assert!(mix.len() <= sp * sq);
        prop_assert!(choice.len() <= sp + sq);
    }

    #[test]
    fn scheduler_outcomes_grow_with_depth(seed in any::<u64>()) {
        let b = backend();
        let c = Config::new(program_from_seed(seed, Root::Par), b.zero_store());
        let h = History::start(c.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let sch = random_scheduler(&c, &b, 5, &mut rng).unwrap();
        let outs: Vec<_> = (0..=5).map(|n| evaluate(&sch, &b, &h, n).unwrap().unwrap()).collect();
        for w in outs.windows(2) {
            prop_assert!(w[0].leq(&w[1]));
        }
        let first: Vec<_> = (0..=5).map(|n| evaluate(&First, &b, &h, n).unwrap().unwrap()).collect();
        for w in first.windows(2) {
            prop_assert!(w[0].leq(&w[1]));
        }
    }

    #[test]
    fn holds_persists_under_larger_budgets(seed in any::<u64>(), v in 0i64..=2, t in 0usize..4) {
        let b = backend();
        let c = Config::new(program_from_seed(seed, Root::Any), b.zero_store());
        let cond = Condition::cmp(Expr::var("x"), CmpOp::Eq, Expr::int(v));
        let phi = Formula::May(Inner::Threshold(cond, Rational::new((t as i64).into(), 4.into())));
        let mut engine = Engine::new(&b, EngineOptions::default());
        if let Verdict::Holds { depth } = semi_decide(&mut engine, &c, &phi, Mode::Biconvex, 5).unwrap().verdict {
            for budget in depth..=7 {
                let again = semi_decide(&mut engine, &c, &phi, Mode::Biconvex, budget).unwrap().verdict;
                let ok = matches!(again, Verdict::Holds { depth: m } if m <= depth);
                prop_assert!(ok, "budget {}: {}", budget, again);
            }
        }
    }
}
