//! Multiple summation and multiplication in closed form.
//!
//! Unlike folding the binary rules, these compute the bound parameters from a
//! single accumulated expression, so they do not depend on operand order.

use super::bound::{abs_convolution, convolution, sorted_product};
use super::{exp_i, pow_nonneg, BoundSum, ExpansionError, LaurentExpansion, RemainderBound};
use crate::rational::Rational;

/// Smallest `δ` among the operands whose order attains the minimum.
fn min_delta_at(orders: &[i64], bounds: &[&RemainderBound]) -> Rational {
    let best = *orders.iter().min().expect("nonempty");
    orders
        .iter()
        .zip(bounds)
        .filter(|(o, _)| **o == best)
        .map(|(_, b)| &b.delta)
        .min()
        .expect("nonempty")
        .clone()
}

fn all_bounds(terms: &[LaurentExpansion]) -> Option<Vec<&RemainderBound>> {
    terms.iter().map(|t| t.bound.as_ref()).collect()
}

fn min_eps(bounds: &[&RemainderBound]) -> f64 {
    bounds.iter().map(|b| b.eps_bar).fold(f64::INFINITY, f64::min)
}

/// `Σ_i A_i` over powers `min h_i..=min k_i`.
pub fn sum_many(terms: &[LaurentExpansion]) -> Result<LaurentExpansion, ExpansionError> {
    if terms.is_empty() {
        return Err(ExpansionError::EmptySequence);
    }
    let h = terms.iter().map(|t| t.h).min().unwrap();
    let k = terms.iter().map(|t| t.k()).min().unwrap();
    let coeffs = (h..=k)
        .map(|p| terms.iter().map(|t| t.coeff(p)).sum())
        .collect();
    let bound = all_bounds(terms).map(|bounds| {
        let orders: Vec<i64> = terms.iter().map(|t| t.k()).collect();
        let delta = min_delta_at(&orders, &bounds);
        let eps = min_eps(&bounds);
        let base = exp_i(k) + &delta;
        let mut g = BoundSum::new();
        for (t, b) in terms.iter().zip(&bounds) {
            g.push(b.g * pow_nonneg(eps, &(exp_i(t.k()) + &b.delta - &base)));
            for p in (k + 1)..=t.k() {
                g.push_scaled(&t.coeff(p), eps, &(exp_i(p) - &base));
            }
        }
        RemainderBound::raw(delta, g.total(), eps)
    });
    Ok(LaurentExpansion { h, coeffs, bound })
}

/// `Π_i A_i` over powers `Σ h_i..=min_m (k_m − h_m) + Σ h_i`.
///
/// The remainder of the product is split into the dropped polynomial terms
/// and a telescoped sum in which factor `j` contributes its remainder times
/// the magnitudes of all other factors:
///
/// ```text
/// G = Σ_{s>k} M_s ε̄^{s−k−δ}
///   + Σ_j G_j ε̄^{Σ_{i≠j} h_i + k_j + δ_j − k − δ}
///         Π_{i≠j} (Σ_l |a_{i,l}| ε̄^{l−h_i} + G_i ε̄^{k_i+δ_i−h_i})
/// ```
///
/// where `M_s` is the exact convolution of the coefficient magnitudes.
pub fn prod_many(factors: &[LaurentExpansion]) -> Result<LaurentExpansion, ExpansionError> {
    if factors.is_empty() {
        return Err(ExpansionError::EmptySequence);
    }
    let h_sum: i64 = factors.iter().map(|f| f.h).sum();
    let widths: Vec<i64> = factors.iter().map(|f| f.k() - f.h).collect();
    let k = h_sum + widths.iter().min().unwrap();
    let n = (k - h_sum) as usize;

    let mut full = factors[0].coeffs.clone();
    for f in &factors[1..] {
        full = convolution(&full, &f.coeffs);
        full.truncate(n + 1);
    }
    let coeffs = full;

    let bound = all_bounds(factors).map(|bounds| {
        let delta = min_delta_at(&widths, &bounds);
        let eps = min_eps(&bounds);
        let base = exp_i(k) + &delta;
        let mut g = BoundSum::new();

        let mut mags = factors[0].coeffs.clone();
        for f in &factors[1..] {
            mags = abs_convolution(&mags, &f.coeffs);
        }
        for (s, m) in mags.iter().enumerate().skip(n + 1) {
            g.push_scaled(m, eps, &(exp_i(h_sum + s as i64) - &base));
        }

        // Magnitude of factor i relative to ε^{h_i}, including its remainder.
        let envelopes: Vec<f64> = factors
            .iter()
            .zip(&bounds)
            .map(|(f, b)| {
                let mut env = BoundSum::new();
                for (l, c) in f.coeffs.iter().enumerate() {
                    env.push_scaled(c, eps, &exp_i(l as i64));
                }
                env.push(b.g * pow_nonneg(eps, &(exp_i(f.k() - f.h) + &b.delta)));
                env.total()
            })
            .collect();
        for (j, (f, b)) in factors.iter().zip(&bounds).enumerate() {
            if b.g == 0.0 {
                continue;
            }
            let exponent = exp_i(h_sum - f.h + f.k()) + &b.delta - &base;
            let mut parts: Vec<f64> = envelopes
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, e)| *e)
                .collect();
            parts.push(b.g);
            parts.push(pow_nonneg(eps, &exponent));
            g.push(sorted_product(parts));
        }
        RemainderBound::raw(delta, g.total(), eps)
    });
    Ok(LaurentExpansion {
        h: h_sum,
        coeffs,
        bound,
    })
}
