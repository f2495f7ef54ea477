//! Binary operational rules: scaling, sums, products, reciprocals, quotients.
//!
//! Each rule computes coefficients exactly and, when every operand carries a
//! bound, the bound parameters `(δ, G, ε̄)` of the result. All `ε̄` powers in
//! the `G` formulas are nonnegative by construction; [`pow_nonneg`] asserts it.

use num_traits::{One, Signed, Zero};

use super::bound::{abs_convolution, convolution, sorted_product};
use super::{delta_by_order, exp_i, pow_nonneg, BoundSum, ExpansionError, LaurentExpansion, RemainderBound};
use crate::rational::{to_f64, Rational};

/// How [`div_with`] derives the quotient's bound parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivMode {
    /// `a · reciprocal(b)` through the product rule.
    #[default]
    ViaReciprocal,
    /// Closed-form quotient parameters computed from `a` and `b` directly.
    Direct,
}

/// `c · A`. `c = 0` yields the zero expansion with an exact bound.
pub fn scale(c: &Rational, a: &LaurentExpansion) -> LaurentExpansion {
    let coeffs = a.coeffs.iter().map(|x| x * c).collect();
    let bound = a.bound.as_ref().map(|b| {
        if c.is_zero() {
            RemainderBound::raw(b.delta.clone(), 0.0, b.eps_bar)
        } else {
            RemainderBound::raw(b.delta.clone(), to_f64(&c.abs()) * b.g, b.eps_bar)
        }
    });
    LaurentExpansion {
        h: a.h,
        coeffs,
        bound,
    }
}

/// `A + B` over powers `min(h_A, h_B)..=min(k_A, k_B)`.
pub fn add(a: &LaurentExpansion, b: &LaurentExpansion) -> LaurentExpansion {
    let h = a.h.min(b.h);
    let k = a.k().min(b.k());
    let coeffs = (h..=k).map(|p| a.coeff(p) + b.coeff(p)).collect();
    let bound = match (&a.bound, &b.bound) {
        (Some(ba), Some(bb)) => {
            let delta = delta_by_order(a.k(), b.k(), &ba.delta, &bb.delta);
            let eps = ba.eps_bar.min(bb.eps_bar);
            let base = exp_i(k) + &delta;
            let mut g = BoundSum::new();
            for (x, bx) in [(a, ba), (b, bb)] {
                g.push(bx.g * pow_nonneg(eps, &(exp_i(x.k()) + &bx.delta - &base)));
                for p in (k + 1)..=x.k() {
                    g.push_scaled(&x.coeff(p), eps, &(exp_i(p) - &base));
                }
            }
            Some(RemainderBound::raw(delta, g.total(), eps))
        }
        _ => None,
    };
    LaurentExpansion {
        h,
        coeffs,
        bound,
    }
}

/// `A · B` over powers `h_A + h_B..=min(k_A + h_B, k_B + h_A)`.
pub fn mul(a: &LaurentExpansion, b: &LaurentExpansion) -> LaurentExpansion {
    let h = a.h + b.h;
    let k = (a.k() + b.h).min(b.k() + a.h);
    let full = convolution(&a.coeffs, &b.coeffs);
    let coeffs = full[..=(k - h) as usize].to_vec();
    let bound = match (&a.bound, &b.bound) {
        (Some(ba), Some(bb)) => {
            let delta = delta_by_order(a.k() + b.h, b.k() + a.h, &ba.delta, &bb.delta);
            let eps = ba.eps_bar.min(bb.eps_bar);
            let base = exp_i(k) + &delta;
            let mut g = BoundSum::new();
            // Polynomial products that fall beyond ε^k.
            let mags = abs_convolution(&a.coeffs, &b.coeffs);
            for (s, m) in mags.iter().enumerate().skip((k - h + 1) as usize) {
                g.push_scaled(m, eps, &(exp_i(h + s as i64) - &base));
            }
            // Remainder of one factor times the polynomial part of the other.
            for (x, bx, y) in [(a, ba, b), (b, bb, a)] {
                if bx.g == 0.0 {
                    continue;
                }
                let mut inner = BoundSum::new();
                for (j, c) in y.coeffs.iter().enumerate() {
                    let power = y.h + j as i64;
                    inner.push_scaled(c, eps, &(exp_i(power + x.k()) + &bx.delta - &base));
                }
                g.push(bx.g * inner.total());
            }
            // Product of the two remainders.
            if ba.g != 0.0 && bb.g != 0.0 {
                let e = exp_i(a.k() + b.k()) + &ba.delta + &bb.delta - &base;
                g.push(sorted_product(vec![ba.g, bb.g, pow_nonneg(eps, &e)]));
            }
            Some(RemainderBound::raw(delta, g.total(), eps))
        }
        _ => None,
    };
    LaurentExpansion {
        h,
        coeffs,
        bound,
    }
}

/// Coefficients `c'_0..c'_n` of `1/B'` where `B' = Σ b'_t ε^t`, `b'_0 ≠ 0`.
fn inverse_series(b: &[Rational], n: usize) -> Vec<Rational> {
    let lead_inv = b[0].recip();
    let mut c: Vec<Rational> = Vec::with_capacity(n + 1);
    c.push(lead_inv.clone());
    for m in 1..=n {
        let mut acc = Rational::zero();
        for t in 1..=m.min(b.len() - 1) {
            acc += &b[t] * &c[m - t];
        }
        c.push(-(&lead_inv * acc));
    }
    c
}

/// Radius on which `|B(ε)| ≥ |b_h|/2 · ε^h`:
/// `ε̃ = (|b_h| / (2S))^{1/δ}` with
/// `S = Σ_{h<i≤k} |b_i| ε̄^{i−h−δ} + G ε̄^{k−h}` (infinite when `S = 0`).
fn pivot_radius(b: &LaurentExpansion, bb: &RemainderBound) -> f64 {
    let mut s = BoundSum::new();
    for p in (b.h + 1)..=b.k() {
        s.push_scaled(&b.coeff(p), bb.eps_bar, &(exp_i(p - b.h) - &bb.delta));
    }
    s.push(bb.g * pow_nonneg(bb.eps_bar, &exp_i(b.k() - b.h)));
    let s = s.total();
    if s == 0.0 {
        return f64::INFINITY;
    }
    let lead = to_f64(&b.leading().abs());
    (lead / (2.0 * s)).powf(1.0 / to_f64(&bb.delta))
}

fn require_pivotal(b: &LaurentExpansion) -> Result<(), ExpansionError> {
    if b.is_pivotal() {
        Ok(())
    } else {
        Err(ExpansionError::NonPivotal { h: b.h })
    }
}

/// `1 / B` for pivotal `B`, over powers `−h_B..=k_B − 2h_B`.
pub fn reciprocal(b: &LaurentExpansion) -> Result<LaurentExpansion, ExpansionError> {
    require_pivotal(b)?;
    let n = (b.k() - b.h) as usize;
    let c = inverse_series(&b.coeffs, n);
    let h = -b.h;
    let bound = b.bound.as_ref().map(|bb| {
        let eps = bb.eps_bar.min(pivot_radius(b, bb));
        let base = exp_i(n as i64) + &bb.delta;
        let mut g = BoundSum::new();
        let mags = abs_convolution(&b.coeffs, &c);
        for (s, m) in mags.iter().enumerate().skip(n + 1) {
            g.push_scaled(m, eps, &(exp_i(s as i64) - &base));
        }
        if bb.g != 0.0 {
            let mut inner = BoundSum::new();
            for (j, cj) in c.iter().enumerate() {
                inner.push_scaled(cj, eps, &exp_i(j as i64));
            }
            g.push(bb.g * inner.total());
        }
        let half_lead = to_f64(&b.leading().abs()) / 2.0;
        RemainderBound::raw(bb.delta.clone(), g.total() / half_lead, eps)
    });
    Ok(LaurentExpansion {
        h,
        coeffs: c,
        bound,
    })
}

/// `A / B` with the default [`DivMode::ViaReciprocal`] bound parameters.
pub fn div(a: &LaurentExpansion, b: &LaurentExpansion) -> Result<LaurentExpansion, ExpansionError> {
    div_with(a, b, DivMode::ViaReciprocal)
}

/// `A / B` for pivotal `B`, over powers
/// `h_A − h_B..=min(k_A − h_B, k_B − 2h_B + h_A)`.
///
/// Both modes produce identical coefficients; only the bound differs.
pub fn div_with(
    a: &LaurentExpansion,
    b: &LaurentExpansion,
    mode: DivMode,
) -> Result<LaurentExpansion, ExpansionError> {
    require_pivotal(b)?;
    match mode {
        DivMode::ViaReciprocal => Ok(mul(a, &reciprocal(b)?)),
        DivMode::Direct => Ok(div_direct(a, b)),
    }
}

fn div_direct(a: &LaurentExpansion, b: &LaurentExpansion) -> LaurentExpansion {
    let h = a.h - b.h;
    // Highest power of A matched by long division.
    let top = a.k().min(b.k() + a.h - b.h);
    let n = (top - a.h) as usize;
    let lead = b.leading();
    let mut d: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut acc = a.coeffs[m].clone();
        for t in 1..=m.min(b.coeffs.len() - 1) {
            acc -= &b.coeffs[t] * &d[m - t];
        }
        d.push(acc / lead);
    }
    let bound = match (&a.bound, &b.bound) {
        (Some(ba), Some(bb)) => {
            let delta = delta_by_order(a.k() - b.h, b.k() - 2 * b.h + a.h, &ba.delta, &bb.delta);
            let eps = ba.eps_bar.min(bb.eps_bar).min(pivot_radius(b, bb));
            let base = exp_i(top) + &delta;
            let mut g = BoundSum::new();
            for p in (top + 1)..=a.k() {
                g.push_scaled(&a.coeff(p), eps, &(exp_i(p) - &base));
            }
            // B·D products beyond ε^top; b indexed from h_B, d from h_A − h_B.
            let mags = abs_convolution(&b.coeffs, &d);
            for (s, m) in mags.iter().enumerate().skip(n + 1) {
                g.push_scaled(m, eps, &(exp_i(a.h + s as i64) - &base));
            }
            g.push(ba.g * pow_nonneg(eps, &(exp_i(a.k()) + &ba.delta - &base)));
            if bb.g != 0.0 {
                let mut inner = BoundSum::new();
                for (j, dj) in d.iter().enumerate() {
                    let power = h + j as i64;
                    inner.push_scaled(dj, eps, &(exp_i(power + b.k()) + &bb.delta - &base));
                }
                g.push(bb.g * inner.total());
            }
            let half_lead = to_f64(&lead.abs()) / 2.0;
            Some(RemainderBound::raw(delta, g.total() / half_lead, eps))
        }
        _ => None,
    };
    LaurentExpansion {
        h,
        coeffs: d,
        bound,
    }
}

impl std::ops::Neg for &LaurentExpansion {
    type Output = LaurentExpansion;

    fn neg(self) -> LaurentExpansion {
        scale(&-Rational::one(), self)
    }
}
