//! Float arithmetic for the `G` and `ε̄` bound parameters.
//!
//! Every `G` formula is a sum of nonnegative terms of the form
//! `coefficient · ε̄^exponent`. Terms are collected first and summed in sorted
//! order so the result depends only on the multiset of terms, which is what
//! makes bound parameters of commutative operations bit-identical.

use num_traits::{Signed, Zero};

use crate::rational::{to_f64, Rational};

/// `base^exponent` for a bound-formula exponent, which must be nonnegative.
///
/// A negative exponent means a bound formula was instantiated outside the
/// range where its powers are monotone in ε; that is a bug, not a user error.
pub(crate) fn pow_nonneg(base: f64, exponent: &Rational) -> f64 {
    assert!(
        !exponent.is_negative(),
        "internal error: negative exponent {exponent} applied to ε̄ in a bound formula"
    );
    if exponent.is_zero() {
        return 1.0;
    }
    if exponent.is_integer() {
        if let Ok(n) = i32::try_from(exponent.to_integer()) {
            return base.powi(n);
        }
    }
    base.powf(to_f64(exponent))
}

/// Order-independent accumulator of nonnegative float terms.
#[derive(Debug, Default)]
pub(crate) struct BoundSum {
    terms: Vec<f64>,
}

impl BoundSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, term: f64) {
        debug_assert!(term >= 0.0 || term.is_nan(), "negative bound term {term}");
        if term != 0.0 {
            self.terms.push(term);
        }
    }

    /// Pushes `|c| · base^exponent`.
    pub fn push_scaled(&mut self, c: &Rational, base: f64, exponent: &Rational) {
        if !c.is_zero() {
            self.push(to_f64(&c.abs()) * pow_nonneg(base, exponent));
        }
    }

    pub fn total(mut self) -> f64 {
        self.terms.sort_by(f64::total_cmp);
        self.terms.iter().sum()
    }
}

/// Product of nonnegative floats, independent of the order they are given in.
pub(crate) fn sorted_product(mut factors: Vec<f64>) -> f64 {
    factors.sort_by(f64::total_cmp);
    factors.iter().product()
}

/// Exact convolution of coefficient magnitudes: entry `s` is
/// `Σ_{i+j=s} |a_i||b_j|` (indices relative to each vector's start).
pub(crate) fn abs_convolution(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let x = x.abs();
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += &x * y.abs();
            }
        }
    }
    out
}

/// Signed convolution of coefficient vectors.
pub(crate) fn convolution(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}
