//! Laurent asymptotic expansions with certified power-type remainder bounds.
//!
//! A [`LaurentExpansion`] represents a function `A(ε)` on `(0, ε̄]` as
//!
//! ```text
//! A(ε) = a_h ε^h + … + a_k ε^k + o_A(ε^k),   |o_A(ε^k)| ≤ G ε^{k+δ}
//! ```
//!
//! with exact rational coefficients and an optional [`RemainderBound`]
//! `(δ, G, ε̄)`. Expansions without a bound are first-class: every operation
//! accepts them and returns a result that carries coefficients only.
//!
//! Operations never trim leading zero coefficients on their own; the power
//! bookkeeping of every rule uses the declared `h`. Use
//! [`LaurentExpansion::trim`] explicitly when the effective order is wanted.

mod bound;
mod multi;
mod ops;

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, parse_rational, Pretty, Rational};

pub use multi::{prod_many, sum_many};
pub use ops::{add, div, div_with, mul, reciprocal, scale, DivMode};

pub(crate) use bound::{pow_nonneg, BoundSum};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpansionError {
    #[error("lowest power h = {h} exceeds highest power k = {k}")]
    InvalidRange { h: i64, k: i64 },
    #[error("powers {h}..={k} need {expected} coefficients, got {got}")]
    CoefficientCount {
        h: i64,
        k: i64,
        expected: usize,
        got: usize,
    },
    #[error("invalid remainder bound: {0}")]
    InvalidBound(String),
    #[error("nonzero constant {value} cannot be embedded in powers {h}..={k}")]
    ConstantOutOfRange { value: String, h: i64, k: i64 },
    #[error("division by a non-pivotal expansion (coefficient of ε^{h} is zero)")]
    NonPivotal { h: i64 },
    #[error("inconsistent representations: coefficients of ε^{power} differ ({left} vs {right})")]
    InconsistentRepresentations {
        power: i64,
        left: String,
        right: String,
    },
    #[error("cannot rebase remainder exponent δ = {delta} to δ* = {target}")]
    InvalidRebase { delta: String, target: String },
    #[error("expansion carries no remainder bound")]
    MissingBound,
    #[error("operation needs at least one expansion")]
    EmptySequence,
    #[error("ε must be positive, got {0}")]
    NonPositiveEpsilon(String),
}

/// Remainder bound `|o(ε^k)| ≤ G ε^{k+δ}` valid for `0 < ε ≤ ε̄`.
///
/// `G = 0` means the remainder vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderBound {
    delta: Rational,
    g: f64,
    eps_bar: f64,
}

impl RemainderBound {
    /// Checks `0 < δ ≤ 1`, `G ≥ 0` finite, and `0 < ε̄ ≤ 1`.
    pub fn new(delta: Rational, g: f64, eps_bar: f64) -> Result<Self, ExpansionError> {
        if !delta.is_positive() || delta > Rational::one() {
            return Err(ExpansionError::InvalidBound(format!(
                "δ = {} is outside (0, 1]",
                Pretty(&delta)
            )));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(ExpansionError::InvalidBound(format!("G = {g} is not a finite nonnegative number")));
        }
        if !(eps_bar > 0.0 && eps_bar <= 1.0) {
            return Err(ExpansionError::InvalidBound(format!("ε̄ = {eps_bar} is outside (0, 1]")));
        }
        Ok(Self::raw(delta, g, eps_bar))
    }

    /// Exact remainder (`δ = 1`, `G = 0`) on `(0, ε̄]`.
    pub fn exact(eps_bar: f64) -> Self {
        Self::raw(Rational::one(), 0.0, eps_bar)
    }

    pub(crate) fn raw(delta: Rational, g: f64, eps_bar: f64) -> Self {
        debug_assert!(delta.is_positive() && delta <= Rational::one());
        // Adding +0.0 turns a −0.0 produced by empty sums into +0.0.
        Self { delta, g: g + 0.0, eps_bar }
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn eps_bar(&self) -> f64 {
        self.eps_bar
    }

    pub fn is_exact(&self) -> bool {
        self.g == 0.0
    }
}

/// Truncated Laurent polynomial `Σ_{l=h}^{k} a_l ε^l` with an optional
/// remainder bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentExpansion {
    h: i64,
    coeffs: Vec<Rational>,
    bound: Option<RemainderBound>,
}

impl LaurentExpansion {
    /// `coeffs[l]` is the coefficient of `ε^{h+l}`; `k = h + coeffs.len() − 1`.
    pub fn new(
        h: i64,
        coeffs: Vec<Rational>,
        bound: Option<RemainderBound>,
    ) -> Result<Self, ExpansionError> {
        if coeffs.is_empty() {
            return Err(ExpansionError::CoefficientCount {
                h,
                k: h - 1,
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { h, coeffs, bound })
    }

    /// Builds from an explicit `(h, k)` range, checking the coefficient count.
    pub fn from_range(
        h: i64,
        k: i64,
        coeffs: Vec<Rational>,
        bound: Option<RemainderBound>,
    ) -> Result<Self, ExpansionError> {
        if h > k {
            return Err(ExpansionError::InvalidRange { h, k });
        }
        let expected = (k - h + 1) as usize;
        if coeffs.len() != expected {
            return Err(ExpansionError::CoefficientCount {
                h,
                k,
                expected,
                got: coeffs.len(),
            });
        }
        Self::new(h, coeffs, bound)
    }

    /// Expansion whose remainder is known as `|o| ≤ G ε^{k+δ}` with `δ` possibly
    /// larger than 1. The bound is re-indexed to the `0 < δ' ≤ 1` form by
    /// raising `k` and padding zero coefficients:
    /// `k' = k + ⌊δ⌋ − [δ ∈ ℤ]`, `δ' = δ − ⌊δ⌋ + [δ ∈ ℤ]`, `G` unchanged.
    pub fn with_remainder_exponent(
        h: i64,
        coeffs: Vec<Rational>,
        delta: Rational,
        g: f64,
        eps_bar: f64,
    ) -> Result<Self, ExpansionError> {
        if !delta.is_positive() {
            return Err(ExpansionError::InvalidBound(format!(
                "δ = {} must be positive",
                Pretty(&delta)
            )));
        }
        let floor = delta.floor().to_integer();
        let shift: i64 = if delta.is_integer() {
            i64::try_from(floor).expect("δ too large") - 1
        } else {
            i64::try_from(floor).expect("δ too large")
        };
        let reduced = delta - Rational::from_integer(shift.into());
        let mut coeffs = coeffs;
        coeffs.extend(std::iter::repeat_with(Rational::zero).take(shift as usize));
        let bound = RemainderBound::new(reduced, g, eps_bar)?;
        Self::new(h, coeffs, Some(bound))
    }

    /// `c` as an expansion over powers `h..=k`, exact on `(0, 1]`.
    pub fn embed_constant(c: Rational, h: i64, k: i64) -> Result<Self, ExpansionError> {
        Self::embed_constant_with(c, h, k, 1.0)
    }

    /// `c` as an expansion over powers `h..=k`, exact on `(0, eps0]`.
    pub fn embed_constant_with(
        c: Rational,
        h: i64,
        k: i64,
        eps0: f64,
    ) -> Result<Self, ExpansionError> {
        if h > k {
            return Err(ExpansionError::InvalidRange { h, k });
        }
        if !c.is_zero() && !(h <= 0 && 0 <= k) {
            return Err(ExpansionError::ConstantOutOfRange {
                value: Pretty(&c).to_string(),
                h,
                k,
            });
        }
        let mut coeffs = vec![Rational::zero(); (k - h + 1) as usize];
        if !c.is_zero() {
            coeffs[(-h) as usize] = c;
        }
        Ok(Self {
            h,
            coeffs,
            bound: Some(RemainderBound::exact(eps0)),
        })
    }

    /// Exact polynomial `Σ coeffs[l] ε^{h+l}` on `(0, 1]`.
    pub fn polynomial(h: i64, coeffs: Vec<Rational>) -> Result<Self, ExpansionError> {
        Self::new(h, coeffs, Some(RemainderBound::exact(1.0)))
    }

    pub fn h(&self) -> i64 {
        self.h
    }

    pub fn k(&self) -> i64 {
        self.h + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `ε^power`, zero outside the retained range.
    pub fn coeff(&self, power: i64) -> Rational {
        if power < self.h || power > self.k() {
            Rational::zero()
        } else {
            self.coeffs[(power - self.h) as usize].clone()
        }
    }

    pub fn leading(&self) -> &Rational {
        &self.coeffs[0]
    }

    pub fn is_pivotal(&self) -> bool {
        !self.coeffs[0].is_zero()
    }

    pub fn bound(&self) -> Option<&RemainderBound> {
        self.bound.as_ref()
    }

    pub fn with_bound(mut self, bound: Option<RemainderBound>) -> Self {
        self.bound = bound;
        self
    }

    pub fn without_bound(self) -> Self {
        self.with_bound(None)
    }

    /// Same coefficients and powers; used to compare expansions ignoring bounds.
    pub fn same_coefficients(&self, other: &Self) -> bool {
        self.h == other.h && self.coeffs == other.coeffs
    }

    /// Drops leading zero coefficients (keeping at least the `ε^k` slot).
    /// The remainder bound refers to `ε^{k+δ}` and is unaffected.
    pub fn trim(&self) -> Self {
        let skip = self
            .coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(self.coeffs.len() - 1);
        Self {
            h: self.h + skip as i64,
            coeffs: self.coeffs[skip..].to_vec(),
            bound: self.bound.clone(),
        }
    }

    /// Exact value of the retained polynomial part at `ε = eps`.
    pub fn evaluate(&self, eps: &Rational) -> Result<Rational, ExpansionError> {
        if !eps.is_positive() {
            return Err(ExpansionError::NonPositiveEpsilon(format_rational(eps)));
        }
        Ok(self.evaluate_unchecked(eps))
    }

    pub(crate) fn evaluate_unchecked(&self, eps: &Rational) -> Rational {
        // Horner in ε, then shift by ε^h.
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * eps + c;
        }
        acc * crate::rational::powi(eps, self.h)
    }

    /// Rewrites the bound at a smaller exponent:
    /// `(δ*, G ε̄^{δ−δ*}, ε̄)`.
    pub fn rebase_delta(&self, delta_star: &Rational) -> Result<Self, ExpansionError> {
        let b = self.bound.as_ref().ok_or(ExpansionError::MissingBound)?;
        if !delta_star.is_positive() || delta_star > &Rational::one() || delta_star > &b.delta {
            return Err(ExpansionError::InvalidRebase {
                delta: Pretty(&b.delta).to_string(),
                target: Pretty(delta_star).to_string(),
            });
        }
        let g = b.g * pow_nonneg(b.eps_bar, &(&b.delta - delta_star));
        Ok(Self {
            h: self.h,
            coeffs: self.coeffs.clone(),
            bound: Some(RemainderBound::raw(delta_star.clone(), g, b.eps_bar)),
        })
    }

    /// Merges two representations of the same function into the more
    /// informative one.
    ///
    /// Coefficients must agree wherever both are retained (a power below a
    /// representation's `h` counts as a zero coefficient). The result keeps
    /// the larger `k`; its lowest power is the larger of the two `h`, which is
    /// sound because the agreement check certifies the dropped slots are zero.
    /// The bound follows the priority order: larger `k`, then larger `δ`, then
    /// `(min G, min ε̄)`.
    pub fn combine_representations(a1: &Self, a2: &Self) -> Result<Self, ExpansionError> {
        let lo = a1.h.min(a2.h);
        let hi = a1.k().min(a2.k());
        for power in lo..=hi {
            let (x, y) = (a1.coeff(power), a2.coeff(power));
            if x != y {
                return Err(ExpansionError::InconsistentRepresentations {
                    power,
                    left: Pretty(&x).to_string(),
                    right: Pretty(&y).to_string(),
                });
            }
        }

        let richer = if a1.k() != a2.k() {
            if a1.k() > a2.k() {
                a1
            } else {
                a2
            }
        } else if a1.h >= a2.h {
            a1
        } else {
            a2
        };
        let h = a1.h.max(a2.h);
        let coeffs: Vec<Rational> = (h..=richer.k()).map(|p| richer.coeff(p)).collect();

        let bound = match (&a1.bound, &a2.bound) {
            (Some(b1), Some(b2)) => Some(if a1.k() != a2.k() {
                if a1.k() > a2.k() {
                    b1.clone()
                } else {
                    b2.clone()
                }
            } else if b1.delta != b2.delta {
                if b1.delta > b2.delta {
                    b1.clone()
                } else {
                    b2.clone()
                }
            } else {
                RemainderBound::raw(b1.delta.clone(), b1.g.min(b2.g), b1.eps_bar.min(b2.eps_bar))
            }),
            (Some(b), None) => (a1.k() >= a2.k()).then(|| b.clone()),
            (None, Some(b)) => (a2.k() >= a1.k()).then(|| b.clone()),
            (None, None) => None,
        };
        Ok(Self { h, coeffs, bound })
    }
}

impl fmt::Display for LaurentExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (l, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let power = self.h + l as i64;
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            first = false;
            match power {
                0 => write!(f, "{}", Pretty(&mag))?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{}·", Pretty(&mag))?;
                    }
                    match power {
                        1 => f.write_str("ε")?,
                        p => write!(f, "ε^{p}")?,
                    }
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, "  [h={}, k={}", self.h, self.k())?;
        match &self.bound {
            Some(b) => write!(f, "; δ={}, G={}, ε̄={}]", Pretty(&b.delta), b.g, b.eps_bar),
            None => f.write_str("; no bound]"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BoundRepr {
    delta: String,
    #[serde(rename = "G")]
    g: f64,
    #[serde(rename = "epsBar")]
    eps_bar: f64,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    h: i64,
    k: i64,
    coeffs: Vec<String>,
    bound: Option<BoundRepr>,
}

impl Serialize for LaurentExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ExpansionRepr {
            h: self.h,
            k: self.k(),
            coeffs: self.coeffs.iter().map(format_rational).collect(),
            bound: self.bound.as_ref().map(|b| BoundRepr {
                delta: format_rational(&b.delta),
                g: b.g,
                eps_bar: b.eps_bar,
            }),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentExpansion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ExpansionRepr::deserialize(d)?;
        let coeffs = repr
            .coeffs
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let bound = repr
            .bound
            .map(|b| {
                let delta = parse_rational(&b.delta).map_err(D::Error::custom)?;
                RemainderBound::new(delta, b.g, b.eps_bar).map_err(D::Error::custom)
            })
            .transpose()?;
        Self::from_range(repr.h, repr.k, coeffs, bound).map_err(D::Error::custom)
    }
}

/// Comparison helper shared by the rules: which of two exponents is binding.
pub(crate) fn delta_by_order(
    left_order: i64,
    right_order: i64,
    left: &Rational,
    right: &Rational,
) -> Rational {
    match left_order.cmp(&right_order) {
        std::cmp::Ordering::Less => left.clone(),
        std::cmp::Ordering::Equal => left.min(right).clone(),
        std::cmp::Ordering::Greater => right.clone(),
    }
}

pub(crate) fn exp_i(n: i64) -> Rational {
    Rational::from_integer(n.into())
}
