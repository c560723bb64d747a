//! Scheduler-driven big-step evaluation.
//!
//! A scheduler maps a history to a distribution over the transitions of the
//! current configuration. [`evaluate`] runs the `n`-step rule: after `n = 0`
//! steps nothing has terminated; otherwise the chosen transitions are mixed,
//! halted outcomes contribute point masses and resumed ones recurse on the
//! extended history.
//!
//! [`det_outcomes`] enumerates the outcomes of deterministic schedulers. Each
//! outcome comes with a witness scheduler tree, glued per branch, and its
//! value is recomputed by [`evaluate`] on that tree.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num::One;
use rand::Rng;
use thiserror::Error;

use crate::backend::Backend;
use crate::smallstep::{step, Config, StepError, TransitionSet};
use crate::valuation::{Outcome, Rational, TransitionValuation, Valuation};

/// `⟨P₀,s₀⟩ ν₀ ⟨P₁,s₁⟩ ν₁ … ⟨Pₖ,sₖ⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History<S: Ord> {
    pub steps: Vec<(Config<S>, TransitionValuation<S>)>,
    pub current: Config<S>,
}

impl<S: Ord + Clone> History<S> {
    pub fn start(c: Config<S>) -> Self {
        History { steps: Vec::new(), current: c }
    }

    /// `h · ν · ⟨P', s'⟩`.
    pub fn extend(&self, nu: TransitionValuation<S>, next: Config<S>) -> Self {
        let mut steps = self.steps.clone();
        steps.push((self.current.clone(), nu));
        History { steps, current: next }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A possibly partial scheduler: `None` means undefined on this history.
pub trait Scheduler<S: Ord> {
    /// Distribution over indices into `options` (the sorted transitions of
    /// `h.current`).
    fn choose(&self, h: &History<S>, options: &TransitionSet<S>) -> Option<Vec<(usize, Rational)>>;
}

/// One decision of a finite scheduler tree and the subtrees for each
/// `(chosen transition, next configuration)` continuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node<S: Ord> {
    pub choice: Vec<(usize, Rational)>,
    pub children: Children<S>,
}

pub type Children<S> = BTreeMap<(TransitionValuation<S>, Config<S>), Arc<Node<S>>>;

/// Deterministic witness trees with their outcomes.
type Witnessed<S> = Arc<Vec<(Arc<Node<S>>, Valuation<S>)>>;

impl<S: Ord> Node<S> {
    pub fn size(&self) -> usize {
        1 + self.children.values().map(|c| c.size()).sum::<usize>()
    }
}

/// Scheduler given by a finite decision tree; undefined off the tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeScheduler<S: Ord> {
    pub root: Option<Arc<Node<S>>>,
}

impl<S: Ord + Clone> TreeScheduler<S> {
    /// The undefined scheduler.
    pub fn empty() -> Self {
        TreeScheduler { root: None }
    }

    fn node(&self, h: &History<S>) -> Option<&Node<S>> {
        let mut node = self.root.as_deref()?;
        for (i, (_, nu)) in h.steps.iter().enumerate() {
            let next = h.steps.get(i + 1).map(|(c, _)| c).unwrap_or(&h.current);
            node = node.children.get(&(nu.clone(), next.clone()))?;
        }
        Some(node)
    }

    pub fn is_deterministic(&self) -> bool {
        fn det<S: Ord>(n: &Node<S>) -> bool {
            n.choice.len() == 1 && n.children.values().all(|c| det(c))
        }
        self.root.as_deref().is_none_or(det)
    }
}

impl<S: Ord + Clone> Scheduler<S> for TreeScheduler<S> {
    fn choose(&self, h: &History<S>, options: &TransitionSet<S>) -> Option<Vec<(usize, Rational)>> {
        let node = self.node(h)?;
        node.choice.iter().all(|(i, _)| *i < options.len()).then(|| node.choice.clone())
    }
}

/// The `n`-step big-step outcome of `sch` from `h`; `Ok(None)` if the
/// scheduler is undefined on some history the rule consults.
pub fn evaluate<B, Sch>(
    sch: &Sch,
    backend: &B,
    h: &History<B::State>,
    n: usize,
) -> Result<Option<Valuation<B::State>>, StepError>
where
    B: Backend,
    Sch: Scheduler<B::State> + ?Sized,
{
    if n == 0 {
        return Ok(Some(Valuation::bottom()));
    }
    let options = step(&h.current, backend)?;
    let Some(dist) = sch.choose(h, &options) else { return Ok(None) };
    let indexed: Vec<&TransitionValuation<B::State>> = options.iter().collect();
    let mut out = Valuation::bottom();
    for (k, pk) in dist {
        let nu = indexed[k];
        for (o, w) in nu.iter() {
            let weight = &pk * w;
            match o {
                Outcome::Halt(s) => out.accumulate(s.clone(), weight),
                Outcome::Resume(p, s) => {
                    let next = h.extend(nu.clone(), Config::new(p.clone(), s.clone()));
                    match evaluate(sch, backend, &next, n - 1)? {
                        Some(mu) => out.accumulate_scaled(&mu, &weight),
                        None => return Ok(None),
                    }
                }
            }
        }
    }
    Ok(Some(out))
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("more than {limit} deterministic outcomes at depth {depth}")]
    LimitExceeded { limit: usize, depth: usize },
}

/// A deterministic scheduler together with the outcome it produces.
#[derive(Clone, Debug)]
pub struct Witness<S: Ord> {
    pub scheduler: TreeScheduler<S>,
    pub outcome: Valuation<S>,
}

/// Enumerates the outcomes of deterministic schedulers after `n` steps.
pub struct DetEnumerator<'b, B: Backend> {
    backend: &'b B,
    limit: usize,
    memo: BTreeMap<(Config<B::State>, usize), Witnessed<B::State>>,
}

impl<'b, B: Backend> DetEnumerator<'b, B> {
    pub fn new(backend: &'b B, limit: usize) -> Self {
        DetEnumerator { backend, limit, memo: BTreeMap::new() }
    }

    /// One witness per distinct outcome. Depth 0 has the single outcome ⊥,
    /// witnessed by the undefined scheduler.
    pub fn witnesses(&mut self, c: &Config<B::State>, n: usize) -> Result<Vec<Witness<B::State>>, OracleError> {
        if n == 0 {
            return Ok(vec![Witness { scheduler: TreeScheduler::empty(), outcome: Valuation::bottom() }]);
        }
        Ok(self
            .trees(c, n)?
            .iter()
            .map(|(node, outcome)| Witness {
                scheduler: TreeScheduler { root: Some(node.clone()) },
                outcome: outcome.clone(),
            })
            .collect())
    }

    fn trees(
        &mut self,
        c: &Config<B::State>,
        n: usize,
    ) -> Result<Witnessed<B::State>, OracleError> {
        let key = (c.clone(), n);
        if let Some(t) = self.memo.get(&key) {
            return Ok(t.clone());
        }
        let options = step(c, self.backend)?;
        let mut found: BTreeMap<Valuation<B::State>, Arc<Node<B::State>>> = BTreeMap::new();
        for (k, nu) in options.iter().enumerate() {
            let branches: Vec<Config<B::State>> = nu
                .support()
                .filter_map(|o| match o {
                    Outcome::Resume(p, s) => Some(Config::new(p.clone(), s.clone())),
                    Outcome::Halt(_) => None,
                })
                .collect();
            // Per-branch witness lists; deeper steps are glued independently.
            let mut per_branch = Vec::with_capacity(branches.len());
            for b in &branches {
                per_branch.push(if n == 1 { None } else { Some(self.trees(b, n - 1)?) });
            }
            let mut index = vec![0usize; branches.len()];
            loop {
                let mut children = BTreeMap::new();
                for (i, b) in branches.iter().enumerate() {
                    if let Some(list) = &per_branch[i] {
                        children.insert((nu.clone(), b.clone()), list[index[i]].0.clone());
                    }
                }
                let node = Arc::new(Node { choice: vec![(k, Rational::one())], children });
                let sch = TreeScheduler { root: Some(node.clone()) };
                let outcome = evaluate(&sch, self.backend, &History::start(c.clone()), n)?
                    .expect("glued witness is defined on every consulted history");
                found.entry(outcome).or_insert(node);
                if found.len() > self.limit {
                    return Err(OracleError::LimitExceeded { limit: self.limit, depth: n });
                }
                // Advance the mixed-radix counter over branch choices.
                let mut i = 0;
                loop {
                    if i == branches.len() {
                        break;
                    }
                    let len = per_branch[i].as_ref().map_or(1, |l| l.len());
                    index[i] += 1;
                    if index[i] < len {
                        break;
                    }
                    index[i] = 0;
                    i += 1;
                }
                if i == branches.len() {
                    break;
                }
            }
        }
        let list = Arc::new(found.into_iter().map(|(v, node)| (node, v)).collect::<Vec<_>>());
        self.memo.insert(key, list.clone());
        Ok(list)
    }
}

/// The set of `n`-step outcomes of deterministic schedulers from `c`.
pub fn det_outcomes<B: Backend>(
    c: &Config<B::State>,
    backend: &B,
    n: usize,
    limit: usize,
) -> Result<BTreeSet<Valuation<B::State>>, OracleError> {
    let mut e = DetEnumerator::new(backend, limit);
    Ok(e.witnesses(c, n)?.into_iter().map(|w| w.outcome).collect())
}

/// A random scheduler defined on every history of length below `depth`.
/// Each decision mixes a random non-empty subset of the transitions with
/// random positive rational weights.
pub fn random_scheduler<B: Backend, R: Rng>(
    c: &Config<B::State>,
    backend: &B,
    depth: usize,
    rng: &mut R,
) -> Result<TreeScheduler<B::State>, StepError> {
    if depth == 0 {
        return Ok(TreeScheduler::empty());
    }
    Ok(TreeScheduler { root: Some(Arc::new(random_node(c, backend, depth, rng)?)) })
}

fn random_node<B: Backend, R: Rng>(
    c: &Config<B::State>,
    backend: &B,
    depth: usize,
    rng: &mut R,
) -> Result<Node<B::State>, StepError> {
    let options = step(c, backend)?;
    let mut picked: Vec<(usize, u32)> = Vec::new();
    for i in 0..options.len() {
        if rng.gen_bool(0.5) {
            picked.push((i, rng.gen_range(1..=4)));
        }
    }
    if picked.is_empty() {
        picked.push((rng.gen_range(0..options.len()), 1));
    }
    let total: u32 = picked.iter().map(|(_, w)| w).sum();
    let choice: Vec<(usize, Rational)> =
        picked.iter().map(|&(i, w)| (i, Rational::new(w.into(), total.into()))).collect();
    let mut children = BTreeMap::new();
    if depth > 1 {
        let indexed: Vec<&TransitionValuation<B::State>> = options.iter().collect();
        for (i, _) in &choice {
            let nu = indexed[*i];
            for o in nu.support() {
                if let Outcome::Resume(p, s) = o {
                    let next = Config::new(p.clone(), s.clone());
                    let child = random_node(&next, backend, depth - 1, rng)?;
                    children.insert((nu.clone(), next), Arc::new(child));
                }
            }
        }
    }
    Ok(Node { choice, children })
}

/// Evaluating twice gives the same result.
pub fn check_determinism<B: Backend, Sch: Scheduler<B::State>>(
    sch: &Sch,
    backend: &B,
    c: &Config<B::State>,
    n: usize,
) -> Result<bool, StepError> {
    let h = History::start(c.clone());
    Ok(evaluate(sch, backend, &h, n)? == evaluate(sch, backend, &h, n)?)
}

/// The `n`-step outcome is below the `(n+1)`-step outcome.
pub fn check_monotonicity<B: Backend, Sch: Scheduler<B::State>>(
    sch: &Sch,
    backend: &B,
    c: &Config<B::State>,
    n: usize,
) -> Result<bool, StepError> {
    let h = History::start(c.clone());
    Ok(match (evaluate(sch, backend, &h, n)?, evaluate(sch, backend, &h, n + 1)?) {
        (Some(a), Some(b)) => a.leq(&b),
        _ => true,
    })
}
