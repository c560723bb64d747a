//! Concurrent probabilistic guarded commands.
//!
//! Programs mix nondeterministic choice, probabilistic choice and
//! interleaving. Their small-step semantics ([`smallstep`]) is checked against
//! a scheduler-based big-step oracle ([`oracle`]) and against finite
//! generating sets of the denotation ([`extension`]). On top of those sits a
//! may/must logic with budgeted semi-decision procedures ([`logic`]).
//! Atomic actions come from a pluggable [`backend`]: integer stores or
//! classical-quantum states.

pub mod syntax;
pub mod valuation;
pub mod backend;
pub mod smallstep;
pub mod oracle;
pub mod lp;
pub mod extension;
pub mod logic;
pub mod cli;
pub mod testing;
