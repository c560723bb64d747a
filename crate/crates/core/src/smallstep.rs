//! One-step transition relation.
//!
//! `step` returns every transition valuation derivable for a configuration.
//! Outcomes are either `Halt(s)` or `Resume(P, s)`; a valuation over them has
//! mass exactly 1.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num::One;
use serde_json::Value;
use thiserror::Error;

use crate::backend::{Backend, BackendError};
use crate::syntax::Program;
use crate::valuation::{outcome_json, Outcome, Rational, TransitionValuation, Valuation};

/// A program paired with the state it runs from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config<S> {
    pub program: Program,
    pub state: S,
}

impl<S> Config<S> {
    pub fn new(program: Program, state: S) -> Self {
        Config { program, state }
    }
}

/// The finite set `⟨P,s⟩ ⟶`, sorted and deduplicated.
pub type TransitionSet<S> = BTreeSet<TransitionValuation<S>>;

/// Rule instances of the transition relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Skip,
    Atomic,
    Seq,
    ParLeft,
    ParRight,
    PChoice,
    NChoiceLeft,
    NChoiceRight,
    IfTrue,
    IfFalse,
    WhileTrue,
    WhileFalse,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::Skip,
        Rule::Atomic,
        Rule::Seq,
        Rule::ParLeft,
        Rule::ParRight,
        Rule::PChoice,
        Rule::NChoiceLeft,
        Rule::NChoiceRight,
        Rule::IfTrue,
        Rule::IfFalse,
        Rule::WhileTrue,
        Rule::WhileFalse,
    ];
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StepError {
    #[error("in configuration {config}: {source}")]
    Backend {
        config: String,
        #[source]
        source: BackendError,
    },
    #[error("{what} exceeded the limit of {limit}")]
    LimitExceeded { what: &'static str, limit: usize },
}

/// `⟨P,s⟩ ⟶`.
pub fn step<B: Backend>(c: &Config<B::State>, backend: &B) -> Result<TransitionSet<B::State>, StepError> {
    derive(&c.program, &c.state, backend, &mut None)
}

/// Like [`step`], also recording which rules the derivations used.
pub fn step_traced<B: Backend>(
    c: &Config<B::State>,
    backend: &B,
    rules: &mut BTreeSet<Rule>,
) -> Result<TransitionSet<B::State>, StepError> {
    derive(&c.program, &c.state, backend, &mut Some(rules))
}

fn derive<B: Backend>(
    p: &Program,
    s: &B::State,
    backend: &B,
    rules: &mut Option<&mut BTreeSet<Rule>>,
) -> Result<TransitionSet<B::State>, StepError> {
    let located = |source: BackendError| StepError::Backend { config: format!("⟨{p}, {s:?}⟩"), source };
    let mut out = TransitionSet::new();
    match p {
        Program::Skip => {
            mark(rules, Rule::Skip);
            out.insert(Valuation::point(Outcome::Halt(s.clone())));
        }
        Program::Atomic(a) => {
            mark(rules, Rule::Atomic);
            let v = backend.interp_atomic(a, s).map_err(located)?;
            out.insert(v.map_keys(|t| Outcome::Halt(t.clone())));
        }
        Program::Seq(l, r) => {
            mark(rules, Rule::Seq);
            for mu in derive(l, s, backend, rules)? {
                out.insert(mu.map_keys(|o| match o {
                    Outcome::Halt(t) => Outcome::Resume((**r).clone(), t.clone()),
                    Outcome::Resume(pi, t) => Outcome::Resume(Program::seq(pi.clone(), (**r).clone()), t.clone()),
                }));
            }
        }
        Program::Par(l, r) => {
            let left = derive(l, s, backend, rules)?;
            let right = derive(r, s, backend, rules)?;
            mark(rules, Rule::ParLeft);
            mark(rules, Rule::ParRight);
            for mu in left {
                out.insert(mu.map_keys(|o| match o {
                    Outcome::Halt(t) => Outcome::Resume((**r).clone(), t.clone()),
                    Outcome::Resume(pi, t) => Outcome::Resume(Program::par(pi.clone(), (**r).clone()), t.clone()),
                }));
            }
            for nu in right {
                out.insert(nu.map_keys(|o| match o {
                    Outcome::Halt(t) => Outcome::Resume((**l).clone(), t.clone()),
                    Outcome::Resume(qi, t) => Outcome::Resume(Program::par((**l).clone(), qi.clone()), t.clone()),
                }));
            }
        }
        Program::PChoice(prob, l, r) => {
            mark(rules, Rule::PChoice);
            let left = derive(l, s, backend, rules)?;
            let right = derive(r, s, backend, rules)?;
            let rest = Rational::one() - prob;
            for mu in &left {
                for nu in &right {
                    let mut mix = Valuation::bottom();
                    mix.accumulate_scaled(mu, prob);
                    mix.accumulate_scaled(nu, &rest);
                    out.insert(mix);
                }
            }
        }
        Program::NChoice(l, r) => {
            let left = derive(l, s, backend, rules)?;
            let right = derive(r, s, backend, rules)?;
            mark(rules, Rule::NChoiceLeft);
            mark(rules, Rule::NChoiceRight);
            out.extend(left);
            out.extend(right);
        }
        Program::If(b, l, r) => {
            if backend.interp_cond(b, s).map_err(located)? {
                mark(rules, Rule::IfTrue);
                out.insert(Valuation::point(Outcome::Resume((**l).clone(), s.clone())));
            } else {
                mark(rules, Rule::IfFalse);
                out.insert(Valuation::point(Outcome::Resume((**r).clone(), s.clone())));
            }
        }
        Program::While(b, body) => {
            if backend.interp_cond(b, s).map_err(located)? {
                mark(rules, Rule::WhileTrue);
                out.insert(Valuation::point(Outcome::Resume(Program::seq((**body).clone(), p.clone()), s.clone())));
            } else {
                mark(rules, Rule::WhileFalse);
                out.insert(Valuation::point(Outcome::Halt(s.clone())));
            }
        }
    }
    Ok(out)
}

fn mark(rules: &mut Option<&mut BTreeSet<Rule>>, r: Rule) {
    if let Some(set) = rules.as_deref_mut() {
        set.insert(r);
    }
}

/// States occurring in any outcome within `n` iterated steps of `c`,
/// including `c`'s own state. Fails once more than `cap` configurations
/// have been visited.
pub fn reachable_states<B: Backend>(
    c: &Config<B::State>,
    backend: &B,
    n: usize,
    cap: usize,
) -> Result<BTreeSet<B::State>, StepError> {
    let mut states = BTreeSet::from([c.state.clone()]);
    let mut seen = BTreeSet::from([c.clone()]);
    let mut queue = VecDeque::from([(c.clone(), 0usize)]);
    while let Some((cfg, depth)) = queue.pop_front() {
        if depth == n {
            continue;
        }
        for mu in step(&cfg, backend)? {
            for o in mu.support() {
                states.insert(o.state().clone());
                if let Outcome::Resume(p, t) = o {
                    let next = Config::new(p.clone(), t.clone());
                    if seen.insert(next.clone()) {
                        if seen.len() > cap {
                            return Err(StepError::LimitExceeded { what: "reachable configurations", limit: cap });
                        }
                        queue.push_back((next, depth + 1));
                    }
                }
            }
        }
    }
    Ok(states)
}

/// Renders a configuration as `⟨program, state⟩` with a JSON state.
pub struct ConfigDisplay<'a, B: Backend>(pub &'a Config<B::State>, pub &'a B);

impl<B: Backend> fmt::Display for ConfigDisplay<'_, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}⟩", self.0.program, self.1.state_json(&self.0.state))
    }
}

pub fn transition_json<B: Backend>(mu: &TransitionValuation<B::State>, backend: &B) -> Value {
    mu.to_json(|o| outcome_json(o, |s| backend.state_json(s)))
}

/// One `<config> --> <valuation>` line per derived transition.
pub fn trace<B: Backend>(c: &Config<B::State>, backend: &B) -> Result<Vec<String>, StepError> {
    let head = ConfigDisplay(c, backend).to_string();
    Ok(step(c, backend)?
        .iter()
        .map(|mu| format!("{head} --> {}", transition_json(mu, backend)))
        .collect())
}
