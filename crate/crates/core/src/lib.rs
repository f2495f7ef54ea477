//! Laurent asymptotic expansions with explicit power-type remainder bounds, and
//! their application to nonlinearly perturbed semi-Markov processes.
//!
//! The crate is layered bottom-up:
//!
//! - [`expansion`]: exact-rational `(h, k, δ, G, ε̄)`-expansions and their
//!   operational calculus (sums, products, reciprocals, quotients, and the
//!   multi-operand forms), each propagating a certified remainder bound.
//! - [`model`]: perturbed semi-Markov models, validation of the structural
//!   conditions, remainder completion and positivity thresholds.
//! - [`reduction`]: non-absorption probabilities, single-state exclusion and
//!   sequential reduction to expected hitting times.
//! - [`stationary`]: stationary-distribution expansions and their consistency
//!   diagnostics.
//! - [`oracle`]: an independent exact-rational ground truth used to check all
//!   of the above at concrete values of ε.

pub mod expansion;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod reduction;
pub mod stationary;

pub use expansion::{DivMode, ExpansionError, LaurentExpansion, RemainderBound};

pub use rational::Rational;
