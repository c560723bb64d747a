//! State spaces, atomic programs and conditions.
//!
//! The language is parametric in these three ingredients; a [`Backend`]
//! fixes them. Two instantiations ship: integer stores ([`classical`]) and
//! pure classical-quantum states ([`quantum`]).

pub mod classical;
pub mod quantum;

use std::fmt::Debug;
use std::hash::Hash;

use serde_json::Value;
use thiserror::Error;

use crate::syntax::{Atomic, Condition};
use crate::valuation::{Valuation, ValuationError};

pub use classical::{ClassicalBackend, Store};
pub use quantum::{CQState, QuantumBackend};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BackendError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {value} of `{var}` is outside the configured bound")]
    Overflow { var: String, value: String },
    #[error("{0} is not supported by the {1} backend")]
    WrongBackend(String, &'static str),
    #[error("index {index} out of range for {what}")]
    IndexOutOfRange { what: &'static str, index: usize },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("amplitude corruption: {0}")]
    Amplitude(String),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

pub trait Backend {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    /// Short name used in reports.
    fn name(&self) -> &'static str;

    /// `⟦a⟧(s)`: a full-probability, finitely supported valuation.
    fn interp_atomic(&self, a: &Atomic, s: &Self::State) -> Result<Valuation<Self::State>, BackendError>;

    /// `⟦b⟧(s)`.
    fn interp_cond(&self, b: &Condition, s: &Self::State) -> Result<bool, BackendError>;

    fn state_json(&self, s: &Self::State) -> Value;
}

/// Evaluates the boolean structure of `c`, delegating atoms to `atom`.
pub(crate) fn eval_condition<F>(c: &Condition, atom: &F) -> Result<bool, BackendError>
where
    F: Fn(&Condition) -> Result<bool, BackendError>,
{
    Ok(match c {
        Condition::True => true,
        Condition::False => false,
        Condition::Not(inner) => !eval_condition(inner, atom)?,
        Condition::And(l, r) => eval_condition(l, atom)? && eval_condition(r, atom)?,
        Condition::Or(l, r) => eval_condition(l, atom)? || eval_condition(r, atom)?,
        Condition::Cmp(..) | Condition::Bit { .. } => atom(c)?,
    })
}
