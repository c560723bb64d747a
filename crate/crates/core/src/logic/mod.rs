//! Observable properties of terminating runs and their semi-decision.
//!
//! The inner layer describes a single output valuation: `P[U] > p` holds of
//! `μ` when `μ(U) > p`. The outer layer quantifies over the outputs of all
//! schedulers: `may φ` asks for one, `must φ` for all. Both are checked on
//! the generating sets `F_1, F_2, …` until one succeeds or the budget runs
//! out; a property that does not hold is never refuted, only left unknown.

mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::backend::{Backend, BackendError};
use crate::extension::{order_leq, threshold_feasible, Engine, EngineError, GenSet, Order, Polarity, Threshold};
use crate::smallstep::Config;
use crate::syntax::{render_condition, render_rational, Condition};
use crate::valuation::{Rational, Valuation};

pub use parser::parse_formula;

/// Formula over a single valuation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Inner {
    /// `μ(U) > p`, with `U` the states satisfying the condition.
    Threshold(Condition, Rational),
    And(Vec<Inner>),
    Or(Vec<Inner>),
    Top,
    Bot,
}

/// Formula over the set of scheduler outcomes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    May(Inner),
    Must(Inner),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Top,
    Bot,
}

impl fmt::Display for Inner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inner::Threshold(c, p) => write!(f, "P[{}] > {}", render_condition(c), render_rational(p)),
            Inner::And(v) => join(f, v, " & "),
            Inner::Or(v) => join(f, v, " | "),
            Inner::Top => f.write_str("true"),
            Inner::Bot => f.write_str("false"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::May(i) => write!(f, "may {i}"),
            Formula::Must(i) => write!(f, "must {i}"),
            Formula::And(v) => join(f, v, " and "),
            Formula::Or(v) => join(f, v, " or "),
            Formula::Top => f.write_str("true"),
            Formula::Bot => f.write_str("false"),
        }
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    f.write_str("(")?;
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{it}")?;
    }
    f.write_str(")")
}

/// Which quantifiers a semantics can observe: the lower powerdomain sees
/// only `may`, the upper only `must`, the biconvex both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mode {
    #[serde(rename = "l")]
    Lower,
    #[serde(rename = "u")]
    Upper,
    #[serde(rename = "b")]
    Biconvex,
}

impl Mode {
    pub fn order(self) -> Order {
        match self {
            Mode::Lower => Order::Lower,
            Mode::Upper => Order::Upper,
            Mode::Biconvex => Order::Biconvex,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            Mode::Lower => "l",
            Mode::Upper => "u",
            Mode::Biconvex => "b",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "l" | "lower" => Ok(Mode::Lower),
            "u" | "upper" => Ok(Mode::Upper),
            "b" | "biconvex" => Ok(Mode::Biconvex),
            _ => Err(format!("unknown mode `{s}` (expected l, u or b)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// The property held of the depth-`depth` approximant.
    Holds { depth: usize },
    /// Not established up to `depth`; `limit` names a resource cap that
    /// stopped the search early.
    Unknown { depth: usize, limit: Option<String> },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds { depth } => write!(f, "holds (witnessed at depth {depth})"),
            Verdict::Unknown { depth, limit: None } => write!(f, "unknown (budget exhausted at depth {depth})"),
            Verdict::Unknown { depth, limit: Some(l) } => write!(f, "unknown (stopped at depth {depth}: {l})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LogicError {
    #[error("unsupported formula: {0}")]
    Unsupported(String),
    #[error("`{quantifier}` is not observable in mode {mode}")]
    Fragment { quantifier: &'static str, mode: &'static str },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// A conjunction of thresholds.
pub type Conjunction = Vec<(Condition, Rational)>;

/// Disjunctive normal form; `[]` is false and `[[]]` is true.
pub fn dnf(phi: &Inner) -> Vec<Conjunction> {
    let mut out: Vec<Conjunction> = match phi {
        Inner::Threshold(c, p) => vec![vec![(c.clone(), p.clone())]],
        Inner::Top => vec![vec![]],
        Inner::Bot => vec![],
        Inner::Or(parts) => parts.iter().flat_map(dnf).collect(),
        Inner::And(parts) => parts.iter().fold(vec![vec![]], |acc, part| {
            let rhs = dnf(part);
            acc.iter()
                .flat_map(|l| {
                    rhs.iter().map(move |r| {
                        let mut c = l.clone();
                        c.extend(r.iter().cloned());
                        c
                    })
                })
                .collect()
        }),
    };
    for conj in &mut out {
        conj.sort();
        conj.dedup();
    }
    if out.iter().any(|c| c.is_empty()) {
        return vec![vec![]];
    }
    out.sort();
    out.dedup();
    out
}

/// Rejects quantifiers the mode cannot observe and `must` bodies that are
/// not conjunctions of thresholds.
pub fn check_fragment(phi: &Formula, mode: Mode) -> Result<(), LogicError> {
    match phi {
        Formula::May(_) if mode == Mode::Upper => Err(LogicError::Fragment { quantifier: "may", mode: "u" }),
        Formula::Must(_) if mode == Mode::Lower => Err(LogicError::Fragment { quantifier: "must", mode: "l" }),
        Formula::Must(body) => {
            if dnf(body).len() > 1 {
                Err(LogicError::Unsupported(format!(
                    "`must {body}`: the body of `must` has to be a conjunction of thresholds; \
                     containment of a hull in a union of half-spaces is not decided"
                )))
            } else {
                Ok(())
            }
        }
        Formula::And(v) | Formula::Or(v) => v.iter().try_for_each(|f| check_fragment(f, mode)),
        Formula::May(_) | Formula::Top | Formula::Bot => Ok(()),
    }
}

/// `μ ⊨ φ`, with condition membership decided by `member`.
pub fn sat_valuation<S: Ord + Clone>(mu: &Valuation<S>, phi: &Inner, member: &dyn Fn(&Condition, &S) -> bool) -> bool {
    match phi {
        Inner::Threshold(c, p) => mu.measure(|s| member(c, s)) > *p,
        Inner::And(v) => v.iter().all(|f| sat_valuation(mu, f, member)),
        Inner::Or(v) => v.iter().any(|f| sat_valuation(mu, f, member)),
        Inner::Top => true,
        Inner::Bot => false,
    }
}

/// Collects every threshold condition of a formula.
fn conditions(phi: &Formula, out: &mut BTreeSet<Condition>) {
    fn inner(i: &Inner, out: &mut BTreeSet<Condition>) {
        match i {
            Inner::Threshold(c, _) => {
                out.insert(c.clone());
            }
            Inner::And(v) | Inner::Or(v) => v.iter().for_each(|x| inner(x, out)),
            Inner::Top | Inner::Bot => {}
        }
    }
    match phi {
        Formula::May(i) | Formula::Must(i) => inner(i, out),
        Formula::And(v) | Formula::Or(v) => v.iter().for_each(|x| conditions(x, out)),
        Formula::Top | Formula::Bot => {}
    }
}

/// Membership table of each condition over the support of `f`.
struct Membership<S> {
    table: Vec<(Condition, BTreeSet<S>)>,
}

impl<S: Ord + Clone> Membership<S> {
    fn build<B: Backend<State = S>>(f: &GenSet<S>, phi: &Formula, backend: &B) -> Result<Self, BackendError> {
        let mut conds = BTreeSet::new();
        conditions(phi, &mut conds);
        let mut table = Vec::with_capacity(conds.len());
        for c in conds {
            let mut set = BTreeSet::new();
            for s in f.support() {
                if backend.interp_cond(&c, s)? {
                    set.insert(s.clone());
                }
            }
            table.push((c, set));
        }
        Ok(Membership { table })
    }

    fn contains(&self, c: &Condition, s: &S) -> bool {
        self.table.iter().find(|(k, _)| k == c).is_some_and(|(_, set)| set.contains(s))
    }
}

/// `conv F ⊨ φ`. The formula must have passed [`check_fragment`].
pub fn sat_genset<B: Backend>(f: &GenSet<B::State>, phi: &Formula, backend: &B) -> Result<bool, LogicError> {
    let members = Membership::build(f, phi, backend)?;
    sat_with(f, phi, &members)
}

fn sat_with<S: Ord + Clone>(f: &GenSet<S>, phi: &Formula, m: &Membership<S>) -> Result<bool, LogicError> {
    Ok(match phi {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::And(v) => {
            for x in v {
                if !sat_with(f, x, m)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(v) => {
            for x in v {
                if sat_with(f, x, m)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::May(body) => dnf(body).iter().any(|conj| conj_feasible(f, conj, m, Polarity::Exists)),
        Formula::Must(body) => match dnf(body).as_slice() {
            [] => false,
            [conj] => conj_feasible(f, conj, m, Polarity::Forall),
            _ => return Err(LogicError::Unsupported(format!("`must {body}` is not a conjunction"))),
        },
    })
}

fn conj_feasible<S: Ord + Clone>(f: &GenSet<S>, conj: &Conjunction, m: &Membership<S>, polarity: Polarity) -> bool {
    let tests: Vec<Box<dyn Fn(&S) -> bool + '_>> =
        conj.iter().map(|(c, _)| Box::new(move |s: &S| m.contains(c, s)) as Box<dyn Fn(&S) -> bool>).collect();
    let thresholds: Vec<Threshold<'_, S>> =
        conj.iter().zip(&tests).map(|((_, p), t)| Threshold { member: t.as_ref(), p: p.clone() }).collect();
    threshold_feasible(f, &thresholds, polarity)
}

/// Per-depth record of a semi-decision run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepthStat {
    pub depth: usize,
    /// `|F_n|` before pruning.
    pub raw: usize,
    /// `|F_n|` after pruning (equal to `raw` when pruning is off).
    pub pruned: usize,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    pub stats: Vec<DepthStat>,
}

/// Checks `F_1, …, F_budget` in turn and reports the first depth at which
/// the formula holds.
pub fn semi_decide<B: Backend>(
    engine: &mut Engine<'_, B>,
    c: &Config<B::State>,
    phi: &Formula,
    mode: Mode,
    budget: usize,
) -> Result<Decision, LogicError> {
    semi_decide_with(engine, c, phi, mode, budget, |_, _| {})
}

/// [`semi_decide`] with a callback receiving each computed level.
pub fn semi_decide_with<B: Backend, F: FnMut(usize, &GenSet<B::State>)>(
    engine: &mut Engine<'_, B>,
    c: &Config<B::State>,
    phi: &Formula,
    mode: Mode,
    budget: usize,
    mut on_level: F,
) -> Result<Decision, LogicError> {
    check_fragment(phi, mode)?;
    let mut stats = Vec::new();
    for n in 1..=budget {
        let start = Instant::now();
        let level = match engine.level(c, n) {
            Ok(level) => level,
            Err(e @ (EngineError::LimitExceeded { .. } | EngineError::Timeout { .. })) => {
                return Ok(Decision { verdict: Verdict::Unknown { depth: n - 1, limit: Some(e.to_string()) }, stats });
            }
            Err(e) => return Err(e.into()),
        };
        on_level(n, &level.set);
        let holds = sat_genset(&level.set, phi, engine.backend())?;
        stats.push(DepthStat {
            depth: n,
            raw: level.raw_len,
            pruned: level.set.len(),
            elapsed_ms: start.elapsed().as_millis() as u64,
        });
        if holds {
            return Ok(Decision { verdict: Verdict::Holds { depth: n }, stats });
        }
    }
    Ok(Decision { verdict: Verdict::Unknown { depth: budget, limit: None }, stats })
}

/// Depth-`n` approximation of contextual refinement: `F_n(P) ≤ F_n(Q)` in
/// the order of the mode. Exact when every run of both programs halts
/// within `n` steps.
pub fn refines<B: Backend>(
    engine: &mut Engine<'_, B>,
    p: &Config<B::State>,
    q: &Config<B::State>,
    mode: Mode,
    n: usize,
) -> Result<bool, LogicError> {
    let fp = engine.gen_set(p, n)?;
    let fq = engine.gen_set(q, n)?;
    Ok(order_leq(&fp, &fq, mode.order()))
}

/// A member of `F` satisfying `μ(U) > p`, if any.
pub fn member_witness<'f, S: Ord + Clone>(
    f: &'f GenSet<S>,
    member: &dyn Fn(&S) -> bool,
    p: &Rational,
) -> Option<&'f Valuation<S>> {
    f.iter().find(|mu| mu.measure(member) > *p)
}
