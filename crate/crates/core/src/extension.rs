//! Finite generating sets of the depth-n approximants and exact convex
//! geometry over them.
//!
//! `F_0 = {⊥}` and `F_{n+1}(P, s)` is the union, over every transition
//! `ν = Σ_i p_i·⟨P_i, s_i⟩ + Σ_j p_j·s_j` of `⟨P, s⟩`, of the mixtures
//! `Σ_i p_i·μ_i + Σ_j p_j·δ_{s_j}` with each `μ_i ∈ F_n(P_i, s_i)`.
//! Every query factors through the convex hull of the set, so extreme-point
//! pruning is transparent to callers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use num::{One, Zero};
use serde_json::Value;
use thiserror::Error;

use crate::backend::Backend;
use crate::lp::{feasible_point, maximize, Constraint, LpOutcome, Relation};
use crate::smallstep::{step, Config, StepError, TransitionSet};
use crate::valuation::{Outcome, Rational, Valuation};

/// A finite, non-empty set of subprobability valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSet<S: Ord> {
    members: BTreeSet<Valuation<S>>,
    support: Vec<S>,
}

impl<S: Ord + Clone> GenSet<S> {
    /// `{⊥}`.
    pub fn bottom() -> Self {
        GenSet { members: BTreeSet::from([Valuation::bottom()]), support: Vec::new() }
    }

    /// The set of the given valuations; `{⊥}` if there are none.
    pub fn from_members<I: IntoIterator<Item = Valuation<S>>>(members: I) -> Self {
        let members: BTreeSet<_> = members.into_iter().collect();
        if members.is_empty() {
            return Self::bottom();
        }
        let support: BTreeSet<S> = members.iter().flat_map(|m| m.support().cloned()).collect();
        GenSet { members, support: support.into_iter().collect() }
    }

    pub fn members(&self) -> &BTreeSet<Valuation<S>> {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = &Valuation<S>> {
        self.members.iter()
    }

    /// Sorted union of the member supports.
    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: &Valuation<S>) -> bool {
        self.members.contains(v)
    }

    pub fn to_json<F: Fn(&S) -> Value>(&self, state_json: F) -> Value {
        Value::Array(self.members.iter().map(|m| m.to_json(&state_json)).collect())
    }
}

/// Sorted union of the supports of all given valuations.
fn joint_support<'a, S: Ord + Clone + 'a>(vals: impl IntoIterator<Item = &'a Valuation<S>>) -> Vec<S> {
    let set: BTreeSet<S> = vals.into_iter().flat_map(|v| v.support().cloned()).collect();
    set.into_iter().collect()
}

/// Is `target` a convex combination of `gens`?
pub fn conv_member<S: Ord + Clone>(target: &Valuation<S>, gens: &[&Valuation<S>]) -> bool {
    if gens.is_empty() {
        return false;
    }
    if gens.contains(&target) {
        return true;
    }
    let support = joint_support(gens.iter().copied().chain([target]));
    let mut rows = Vec::with_capacity(support.len() + 1);
    for s in &support {
        let coeffs: Vec<Rational> = gens.iter().map(|g| g.weight(s)).collect();
        let rhs = target.weight(s);
        if coeffs.iter().all(Zero::is_zero) {
            if rhs.is_zero() {
                continue;
            }
            return false;
        }
        rows.push(Constraint::new(coeffs, Relation::Eq, rhs));
    }
    rows.push(Constraint::new(vec![Rational::one(); gens.len()], Relation::Eq, Rational::one()));
    feasible_point(gens.len(), &rows).is_some()
}

/// Members not expressible as a convex combination of the others: the
/// extreme points, which generate the same hull.
pub fn prune_extreme<S: Ord + Clone>(f: &GenSet<S>) -> GenSet<S> {
    if f.len() <= 2 {
        return f.clone();
    }
    let members: Vec<&Valuation<S>> = f.iter().collect();
    let certain = certainly_extreme(&members, f.support());
    let mut keep = vec![true; members.len()];
    for i in 0..members.len() {
        if certain[i] {
            continue;
        }
        let others: Vec<&Valuation<S>> =
            (0..members.len()).filter(|&j| j != i && keep[j]).map(|j| members[j]).collect();
        if conv_member(members[i], &others) {
            keep[i] = false;
        }
    }
    GenSet::from_members(members.into_iter().zip(keep).filter(|(_, k)| *k).map(|(m, _)| m.clone()))
}

/// Flags members that uniquely maximize or minimize some coordinate or the
/// total mass; such points are extreme without solving an LP.
fn certainly_extreme<S: Ord + Clone>(members: &[&Valuation<S>], support: &[S]) -> Vec<bool> {
    let mut flags = vec![false; members.len()];
    let mut mark_unique = |values: Vec<Rational>| {
        for pick_max in [true, false] {
            let best = if pick_max { values.iter().max() } else { values.iter().min() };
            let best = best.expect("non-empty").clone();
            let hits: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
            if hits.len() == 1 {
                flags[hits[0]] = true;
            }
        }
    };
    for s in support {
        mark_unique(members.iter().map(|m| m.weight(s)).collect());
    }
    mark_unique(members.iter().map(|m| m.mass()).collect());
    flags
}

/// Do the two sets generate the same convex hull?
pub fn conv_equal<S: Ord + Clone>(f: &GenSet<S>, g: &GenSet<S>) -> bool {
    let fs: Vec<&Valuation<S>> = f.iter().collect();
    let gs: Vec<&Valuation<S>> = g.iter().collect();
    f.iter().all(|m| conv_member(m, &gs)) && g.iter().all(|m| conv_member(m, &fs))
}

/// The three mixed-powerdomain orders on hulls of finite sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    /// `↓conv F ⊆ ↓conv G`.
    Lower,
    /// `↑conv G ⊆ ↑conv F`.
    Upper,
    Biconvex,
}

/// `conv F ≤ conv G` in the given order.
pub fn order_leq<S: Ord + Clone>(f: &GenSet<S>, g: &GenSet<S>, order: Order) -> bool {
    match order {
        Order::Lower => f.iter().all(|mu| dominated_by_hull(mu, g)),
        Order::Upper => g.iter().all(|nu| dominates_hull_point(nu, f)),
        Order::Biconvex => order_leq(f, g, Order::Lower) && order_leq(f, g, Order::Upper),
    }
}

/// `∃ν ∈ conv G. μ ≤ ν`.
fn dominated_by_hull<S: Ord + Clone>(mu: &Valuation<S>, g: &GenSet<S>) -> bool {
    if g.iter().any(|nu| mu.leq(nu)) {
        return true;
    }
    let gens: Vec<&Valuation<S>> = g.iter().collect();
    let mut rows: Vec<Constraint> = mu
        .iter()
        .map(|(s, w)| Constraint::new(gens.iter().map(|nu| nu.weight(s)).collect(), Relation::Ge, w.clone()))
        .collect();
    rows.push(Constraint::new(vec![Rational::one(); gens.len()], Relation::Eq, Rational::one()));
    feasible_point(gens.len(), &rows).is_some()
}

/// `∃μ ∈ conv F. μ ≤ ν`.
fn dominates_hull_point<S: Ord + Clone>(nu: &Valuation<S>, f: &GenSet<S>) -> bool {
    if f.iter().any(|mu| mu.leq(nu)) {
        return true;
    }
    let gens: Vec<&Valuation<S>> = f.iter().collect();
    let mut rows: Vec<Constraint> = f
        .support()
        .iter()
        .map(|s| Constraint::new(gens.iter().map(|mu| mu.weight(s)).collect(), Relation::Le, nu.weight(s)))
        .collect();
    rows.push(Constraint::new(vec![Rational::one(); gens.len()], Relation::Eq, Rational::one()));
    feasible_point(gens.len(), &rows).is_some()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Exists,
    Forall,
}

/// A strict threshold `μ(U) > p`, with `U` given by its membership test.
pub struct Threshold<'a, S> {
    pub member: &'a dyn Fn(&S) -> bool,
    pub p: Rational,
}

/// Exists: some `μ ∈ conv F` meets every threshold. Forall: every
/// `μ ∈ conv F` does, which holds iff every member of `F` does.
pub fn threshold_feasible<S: Ord + Clone>(f: &GenSet<S>, constraints: &[Threshold<'_, S>], polarity: Polarity) -> bool {
    let table: Vec<Vec<Rational>> =
        f.iter().map(|mu| constraints.iter().map(|t| mu.measure(|s| (t.member)(s))).collect()).collect();
    let meets = |row: &Vec<Rational>| row.iter().zip(constraints).all(|(m, t)| *m > t.p);
    match polarity {
        Polarity::Forall => table.iter().all(meets),
        Polarity::Exists => {
            if table.iter().any(meets) {
                return true;
            }
            if constraints.len() <= 1 {
                return false;
            }
            // Maximize t = ε + 1 subject to Σ_k λ_k μ_k(U_j) ≥ p_j + ε, Σ λ = 1.
            let k = table.len();
            let mut rows: Vec<Constraint> = constraints
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let mut coeffs: Vec<Rational> = table.iter().map(|row| row[j].clone()).collect();
                    coeffs.push(-Rational::one());
                    Constraint::new(coeffs, Relation::Ge, &t.p - Rational::one())
                })
                .collect();
            let mut simplex = vec![Rational::one(); k];
            simplex.push(Rational::zero());
            rows.push(Constraint::new(simplex, Relation::Eq, Rational::one()));
            let mut objective = vec![Rational::zero(); k];
            objective.push(Rational::one());
            match maximize(k + 1, &rows, &objective) {
                LpOutcome::Optimal { value, .. } => value > Rational::one(),
                LpOutcome::Infeasible | LpOutcome::Unbounded => false,
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Limits {
    /// Largest generating set (before pruning) any configuration may reach.
    pub max_genset: usize,
    /// Largest number of distinct configurations the engine may visit.
    pub max_states: usize,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_genset: 200_000, max_states: 1_000_000, deadline: None }
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub prune: bool,
    pub limits: Limits,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { prune: true, limits: Limits::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("{what} exceeded the limit of {limit} at depth {depth}")]
    LimitExceeded { what: &'static str, limit: usize, depth: usize },
    #[error("time limit reached at depth {depth}")]
    Timeout { depth: usize },
}

/// A computed level: the (possibly pruned) set and its size before pruning.
#[derive(Clone, Debug)]
pub struct Level<S: Ord> {
    pub set: Arc<GenSet<S>>,
    pub raw_len: usize,
}

/// Memoizing evaluator of the generating-set recursion.
pub struct Engine<'b, B: Backend> {
    backend: &'b B,
    options: EngineOptions,
    steps: HashMap<Config<B::State>, Arc<TransitionSet<B::State>>>,
    memo: HashMap<(Config<B::State>, usize), Level<B::State>>,
}

impl<'b, B: Backend> Engine<'b, B> {
    pub fn new(backend: &'b B, options: EngineOptions) -> Self {
        Engine { backend, options, steps: HashMap::new(), memo: HashMap::new() }
    }

    pub fn backend(&self) -> &'b B {
        self.backend
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    /// `F_n` of the configuration.
    pub fn gen_set(&mut self, c: &Config<B::State>, n: usize) -> Result<Arc<GenSet<B::State>>, EngineError> {
        Ok(self.level(c, n)?.set)
    }

    pub fn level(&mut self, c: &Config<B::State>, n: usize) -> Result<Level<B::State>, EngineError> {
        if n == 0 {
            return Ok(Level { set: Arc::new(GenSet::bottom()), raw_len: 1 });
        }
        let key = (c.clone(), n);
        if let Some(level) = self.memo.get(&key) {
            return Ok(level.clone());
        }
        if let Some(deadline) = self.options.limits.deadline {
            if Instant::now() >= deadline {
                return Err(EngineError::Timeout { depth: n });
            }
        }
        let transitions = self.transitions(c)?;
        let mut union: BTreeSet<Valuation<B::State>> = BTreeSet::new();
        for nu in transitions.iter() {
            for mix in self.mixtures(nu, n)? {
                union.insert(mix);
            }
            self.check_size(union.len(), n)?;
        }
        let raw = GenSet::from_members(union);
        let raw_len = raw.len();
        let set = if self.options.prune { prune_extreme(&raw) } else { raw };
        let level = Level { set: Arc::new(set), raw_len };
        self.memo.insert(key, level.clone());
        Ok(level)
    }

    /// `{Σ_i p_i·μ_i + Σ_j p_j·δ_{s_j} | μ_i ∈ F_{n-1}(P_i, s_i)}` for one transition.
    fn mixtures(
        &mut self,
        nu: &Valuation<Outcome<B::State>>,
        n: usize,
    ) -> Result<BTreeSet<Valuation<B::State>>, EngineError> {
        let mut base = Valuation::bottom();
        let mut branches: Vec<(Config<B::State>, Rational)> = Vec::new();
        for (o, w) in nu.iter() {
            match o {
                Outcome::Halt(s) => base.accumulate(s.clone(), w.clone()),
                Outcome::Resume(p, s) => branches.push((Config::new(p.clone(), s.clone()), w.clone())),
            }
        }
        let mut partial = BTreeSet::from([base]);
        for (cfg, w) in branches {
            let child = self.gen_set(&cfg, n - 1)?;
            let mut next = BTreeSet::new();
            for acc in &partial {
                for mu in child.iter() {
                    let mut v = acc.clone();
                    v.accumulate_scaled(mu, &w);
                    next.insert(v);
                }
                self.check_size(next.len(), n)?;
            }
            partial = next;
        }
        Ok(partial)
    }

    fn transitions(&mut self, c: &Config<B::State>) -> Result<Arc<TransitionSet<B::State>>, EngineError> {
        if let Some(t) = self.steps.get(c) {
            return Ok(t.clone());
        }
        if self.steps.len() >= self.options.limits.max_states {
            return Err(EngineError::LimitExceeded {
                what: "visited configurations",
                limit: self.options.limits.max_states,
                depth: 0,
            });
        }
        let t = Arc::new(step(c, self.backend)?);
        self.steps.insert(c.clone(), t.clone());
        Ok(t)
    }

    fn check_size(&self, len: usize, depth: usize) -> Result<(), EngineError> {
        if len > self.options.limits.max_genset {
            return Err(EngineError::LimitExceeded { what: "generating set", limit: self.options.limits.max_genset, depth });
        }
        Ok(())
    }

    /// Number of memoized `(configuration, depth)` entries.
    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }
}

/// Sizes of `F_n` before and after pruning, for `n = 1..=depth`.
pub fn level_sizes<B: Backend>(
    engine: &mut Engine<'_, B>,
    c: &Config<B::State>,
    depth: usize,
) -> Result<BTreeMap<usize, (usize, usize)>, EngineError> {
    let mut out = BTreeMap::new();
    for n in 1..=depth {
        let level = engine.level(c, n)?;
        out.insert(n, (level.raw_len, level.set.len()));
    }
    Ok(out)
}
