//! Finite-support subprobability valuations with exact rational weights.
//!
//! A [`Valuation`] is stored canonically: keys sorted, zero weights dropped.
//! Structural equality is therefore semantic equality, and the empty map is
//! the bottom element.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::syntax::{pretty_print, Program};

pub type Rational = BigRational;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValuationError {
    #[error("valuation mass {0} exceeds 1")]
    MassOverflow(Rational),
    #[error("negative weight {0}")]
    NegativeWeight(Rational),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation<K: Ord> {
    weights: BTreeMap<K, Rational>,
}

impl<K: Ord> Default for Valuation<K> {
    fn default() -> Self {
        Valuation { weights: BTreeMap::new() }
    }
}

impl<K: Ord + fmt::Debug> fmt::Debug for Valuation<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k:?} ↦ {w}")?;
        }
        f.write_str("}")
    }
}

impl<K: Ord + Clone> Valuation<K> {
    /// The zero valuation.
    pub fn bottom() -> Self {
        Self::default()
    }

    /// Point mass `1·δ_k`.
    pub fn point(k: K) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(k, Rational::one());
        Valuation { weights }
    }

    /// Builds a valuation from weighted keys, merging repeated keys.
    pub fn from_pairs<I: IntoIterator<Item = (K, Rational)>>(pairs: I) -> Result<Self, ValuationError> {
        let mut v = Self::bottom();
        for (k, w) in pairs {
            if w.is_negative() {
                return Err(ValuationError::NegativeWeight(w));
            }
            v.accumulate(k, w);
        }
        v.check_mass()?;
        Ok(v)
    }

    fn check_mass(&self) -> Result<(), ValuationError> {
        let m = self.mass();
        if m > Rational::one() {
            Err(ValuationError::MassOverflow(m))
        } else {
            Ok(())
        }
    }

    /// Adds `w` to the weight of `k`. Mass is not checked.
    pub(crate) fn accumulate(&mut self, k: K, w: Rational) {
        if w.is_zero() {
            return;
        }
        let entry = self.weights.entry(k).or_insert_with(Rational::zero);
        *entry += w;
    }

    /// `self += r·other`, unchecked.
    pub(crate) fn accumulate_scaled(&mut self, other: &Valuation<K>, r: &Rational) {
        if r.is_zero() {
            return;
        }
        for (k, w) in &other.weights {
            self.accumulate(k.clone(), w * r);
        }
    }

    pub fn weight(&self, k: &K) -> Rational {
        self.weights.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn mass(&self) -> Rational {
        self.weights.values().sum()
    }

    pub fn is_bottom(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Rational)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.weights.keys()
    }

    /// Pointwise `r·v`.
    pub fn scale(&self, r: &Rational) -> Result<Self, ValuationError> {
        if r.is_negative() {
            return Err(ValuationError::NegativeWeight(r.clone()));
        }
        let mut out = Self::bottom();
        out.accumulate_scaled(self, r);
        out.check_mass()?;
        Ok(out)
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Result<Self, ValuationError> {
        let mut out = self.clone();
        out.accumulate_scaled(other, &Rational::one());
        out.check_mass()?;
        Ok(out)
    }

    /// Pointwise order: `self(k) ≤ other(k)` for every key.
    pub fn leq(&self, other: &Self) -> bool {
        self.weights.iter().all(|(k, w)| match other.weights.get(k) {
            Some(v) => w <= v,
            None => false,
        })
    }

    /// Total weight of the keys satisfying `pred`.
    pub fn measure<F: Fn(&K) -> bool>(&self, pred: F) -> Rational {
        self.weights.iter().filter(|(k, _)| pred(k)).map(|(_, w)| w.clone()).sum()
    }

    /// Pushes the valuation forward along `f`, merging keys that collide.
    pub fn map_keys<K2: Ord + Clone, F: FnMut(&K) -> K2>(&self, mut f: F) -> Valuation<K2> {
        let mut out = Valuation::bottom();
        for (k, w) in &self.weights {
            out.accumulate(f(k), w.clone());
        }
        out
    }

    /// JSON array of `{state, weight}` objects in key order.
    pub fn to_json<F: Fn(&K) -> Value>(&self, key_json: F) -> Value {
        Value::Array(
            self.weights.iter().map(|(k, w)| json!({ "state": key_json(k), "weight": weight_string(w) })).collect(),
        )
    }
}

/// Always `num/den`, including integers (`1/1`).
pub fn weight_string(w: &Rational) -> String {
    format!("{}/{}", w.numer(), w.denom())
}

/// A single outcome of one small step: halt in a state, or resume a residual
/// program from a state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome<S> {
    Halt(S),
    Resume(Program, S),
}

impl<S> Outcome<S> {
    pub fn state(&self) -> &S {
        match self {
            Outcome::Halt(s) | Outcome::Resume(_, s) => s,
        }
    }
}

/// Full-probability valuation over `S + (Pr × S)`.
pub type TransitionValuation<S> = Valuation<Outcome<S>>;

pub fn outcome_json<S, F: Fn(&S) -> Value>(o: &Outcome<S>, state_json: F) -> Value {
    match o {
        Outcome::Halt(s) => json!({ "halt": state_json(s) }),
        Outcome::Resume(p, s) => json!({ "resume": pretty_print(p), "state": state_json(s) }),
    }
}
