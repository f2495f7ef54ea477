//! Remainder completion and positivity thresholds for model construction.
//!
//! In each row one probability, the designated entry `j_i`, is determined by
//! stochasticity: `p_{ij_i} = 1 − Σ_{j≠j_i} p_ij`. Its remainder is therefore
//! fixed by the other entries, and so is its bound.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{ModelError, Quantity, SemiMarkovModel, StateIndex, TransitionEntry};
use crate::expansion::{pow_nonneg, BoundSum, LaurentExpansion, RemainderBound};
use crate::rational::{frac, to_f64, Pretty, Rational};

/// Entry of row `i` whose probability has the smallest retained order
/// `l⁺_{i,Y_i} = min_j l⁺_ij` (smallest label on ties).
pub fn designated_entry(m: &SemiMarkovModel, i: StateIndex) -> StateIndex {
    m.transition_set(i)
        .into_iter()
        .min_by_key(|&j| m.p(i, j).unwrap().k())
        .expect("transition sets are nonempty")
}

fn exponent(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Recomputes the bound of every designated entry from the others:
///
/// ```text
/// δ = min_{j≠j_i} δ_ij,   ε̄ = min_{j≠j_i} ε̄_ij,
/// G = Σ_{j≠j_i} ( Σ_{l⁺_{i,Y}<l≤l⁺_ij} |a_ij[l]| ε₀^{l−l⁺_{i,Y}−δ}
///                 + ε₀^{l⁺_ij−l⁺_{i,Y}+δ_ij−δ} G_ij )
/// ```
///
/// A row with a single entry gets the exact bound on `(0, ε₀]`.
pub fn complete_remainders(m: &SemiMarkovModel) -> Result<SemiMarkovModel, ModelError> {
    let eps0 = m.eps0();
    let mut completed: BTreeMap<StateIndex, RemainderBound> = BTreeMap::new();
    for &i in m.states() {
        let ji = designated_entry(m, i);
        let top = m.p(i, ji).unwrap().k();
        let others: Vec<(StateIndex, &LaurentExpansion, &RemainderBound)> = m
            .transition_set(i)
            .into_iter()
            .filter(|&j| j != ji)
            .map(|j| {
                let p = m.p(i, j).unwrap();
                p.bound()
                    .map(|b| (j, p, b))
                    .ok_or(ModelError::MissingBound {
                        from: i,
                        to: j,
                        which: Quantity::P,
                    })
            })
            .collect::<Result<_, _>>()?;
        if others.is_empty() {
            completed.insert(i, RemainderBound::exact(eps0));
            continue;
        }
        let delta = others.iter().map(|(_, _, b)| b.delta()).min().unwrap().clone();
        let eps = others.iter().map(|(_, _, b)| b.eps_bar()).fold(eps0, f64::min);
        let base = exponent(top) + &delta;
        let mut g = BoundSum::new();
        for (_, p, b) in &others {
            for l in (top + 1)..=p.k() {
                g.push_scaled(&p.coeff(l), eps0, &(exponent(l) - &base));
            }
            g.push(b.g() * pow_nonneg(eps0, &(exponent(p.k()) + b.delta() - &base)));
        }
        completed.insert(i, RemainderBound::new(delta, g.total(), eps)?);
    }
    m.map_entries(|i, j, entry| {
        if j == designated_entry(m, i) {
            Ok(TransitionEntry {
                p: entry.p.clone().with_bound(Some(completed[&i].clone())),
                e: entry.e.clone(),
            })
        } else {
            Ok(entry.clone())
        }
    })
}

/// The exact polynomial model obtained by dropping every remainder and
/// rebalancing each designated entry to `1 − Σ_{j≠j_i} p_ij`, so rows sum to
/// one identically. This is the ground-truth instance of a model whose
/// non-designated remainders vanish.
pub fn polynomialized(m: &SemiMarkovModel) -> Result<SemiMarkovModel, ModelError> {
    let exact = |x: &LaurentExpansion| x.clone().with_bound(Some(RemainderBound::exact(m.eps0())));
    m.map_entries(|i, j, entry| {
        let ji = designated_entry(m, i);
        let p = if j == ji {
            let others: Vec<StateIndex> =
                m.transition_set(i).into_iter().filter(|&x| x != ji).collect();
            let top = others
                .iter()
                .map(|&x| m.p(i, x).unwrap().k())
                .max()
                .unwrap_or(0)
                .max(entry.p.k());
            let coeffs = (0..=top)
                .map(|l| {
                    let rest: Rational = others.iter().map(|&x| m.p(i, x).unwrap().coeff(l)).sum();
                    let one = if l == 0 { Rational::one() } else { Rational::zero() };
                    one - rest
                })
                .collect();
            LaurentExpansion::new(0, coeffs, Some(RemainderBound::exact(m.eps0())))?.trim()
        } else {
            exact(&entry.p)
        };
        Ok(TransitionEntry {
            p,
            e: exact(&entry.e),
        })
    })
}

/// Per-pair `α_ij`, either one value for every pair or an explicit map.
#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    Uniform(Rational),
    PerPair(BTreeMap<(StateIndex, StateIndex), Rational>),
}

impl Alpha {
    fn get(&self, i: StateIndex, j: StateIndex) -> Option<&Rational> {
        match self {
            Alpha::Uniform(a) => Some(a),
            Alpha::PerPair(map) => map.get(&(i, j)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryThresholds {
    pub from: StateIndex,
    pub to: StateIndex,
    /// `ε_{α,ij}` (remainder control for `p_ij`).
    #[serde(rename = "epsAlphaP")]
    pub eps_alpha_p: f64,
    /// `ε'_{α,ij}` (remainder and tail control for `p_ij`).
    #[serde(rename = "epsPrimeP")]
    pub eps_prime_p: f64,
    /// `ε̇_{α,ij}` for `e_ij`.
    #[serde(rename = "epsAlphaE")]
    pub eps_alpha_e: f64,
    /// `ε̇'_{α,ij}` for `e_ij`.
    #[serde(rename = "epsPrimeE")]
    pub eps_prime_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityThresholds {
    #[serde(rename = "epsPrime0")]
    pub eps_prime0: f64,
    #[serde(rename = "epsDoublePrime0")]
    pub eps_double_prime0: f64,
    #[serde(rename = "epsTilde0")]
    pub eps_tilde0: f64,
    pub entries: Vec<EntryThresholds>,
}

/// `(ε_α, ε'_α)` for one expansion with leading power `lo`.
///
/// `ε_α = ε̄ ∧ (α|a[lo]|/G)^{1/δ}` keeps the remainder below `α|a[lo]|ε^{lo}`;
/// `ε'_α = ε_α ∧ α|a[lo]|/A` with `A = Σ_{lo<l≤hi} |a[l]| ε₀^{l−lo−1}` does the
/// same for the higher retained terms.
fn thresholds_for(x: &LaurentExpansion, b: &RemainderBound, alpha: &Rational, eps0: f64) -> (f64, f64) {
    let lead = to_f64(&(alpha * x.leading().abs()));
    let eps_alpha = if b.g() == 0.0 {
        b.eps_bar()
    } else {
        b.eps_bar().min((lead / b.g()).powf(1.0 / to_f64(b.delta())))
    };
    let mut tail = BoundSum::new();
    for l in (x.h() + 1)..=x.k() {
        tail.push_scaled(&x.coeff(l), eps0, &exponent(l - x.h() - 1));
    }
    let a = tail.total();
    let eps_prime = if a == 0.0 { eps_alpha } else { eps_alpha.min(lead / a) };
    (eps_alpha, eps_prime)
}

/// Radius `ε̃₀` below which every `p_ij(ε)` and `e_ij(ε)` is at least
/// `(1 − 2α_ij)` times its leading term, hence positive.
pub fn positivity_thresholds(m: &SemiMarkovModel, alpha: &Alpha) -> Result<PositivityThresholds, ModelError> {
    let half = frac(1, 2);
    let mut entries = Vec::new();
    for (&(i, j), entry) in m.entries() {
        let a = alpha.get(i, j).ok_or_else(|| ModelError::InvalidAlpha {
            from: i,
            to: j,
            alpha: "missing".into(),
        })?;
        if !a.is_positive() || a >= &half {
            return Err(ModelError::InvalidAlpha {
                from: i,
                to: j,
                alpha: Pretty(a).to_string(),
            });
        }
        let bound = |q: Quantity| {
            entry.get(q).bound().ok_or(ModelError::MissingBound {
                from: i,
                to: j,
                which: q,
            })
        };
        let (eps_alpha_p, eps_prime_p) = thresholds_for(&entry.p, bound(Quantity::P)?, a, m.eps0());
        let (eps_alpha_e, eps_prime_e) = thresholds_for(&entry.e, bound(Quantity::E)?, a, m.eps0());
        entries.push(EntryThresholds {
            from: i,
            to: j,
            eps_alpha_p,
            eps_prime_p,
            eps_alpha_e,
            eps_prime_e,
        });
    }
    let eps_prime0 = entries.iter().map(|e| e.eps_prime_p).fold(m.eps0(), f64::min);
    let eps_double_prime0 = entries.iter().map(|e| e.eps_prime_e).fold(m.eps0(), f64::min);
    Ok(PositivityThresholds {
        eps_prime0,
        eps_double_prime0,
        eps_tilde0: eps_prime0.min(eps_double_prime0),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::s;
    use crate::model::tests::{fixture, FIXTURE};
    use crate::rational::int;

    #[test]
    fn designated_entries_of_fixture() {
        let m = fixture();
        assert_eq!(designated_entry(&m, s(1)), s(1));
        assert_eq!(designated_entry(&m, s(2)), s(2));
        assert_eq!(designated_entry(&m, s(3)), s(1));
    }

    #[test]
    fn completes_row_two_of_fixture() {
        let m = complete_remainders(&fixture()).unwrap();
        let b = m.p(s(2), s(2)).unwrap().bound().unwrap();
        // |−1|·ε₀^0 + |2|·ε₀^0 from the ε³ tails of p_21, p_23.
        assert_eq!(b.g(), 3.0);
        assert_eq!(b.delta(), &int(1));
        assert_eq!(b.eps_bar(), 1.0);
        // Completion of an already-completed model is a fixed point.
        assert_eq!(complete_remainders(&m).unwrap(), m);
    }

    #[test]
    fn completion_with_bounded_neighbour() {
        // Row 1: designated p_11 retains only ε⁰; p_12 = 2ε with G = 1 has one
        // coefficient beyond l⁺ = 0.
        let doc = r#"{"N":2,"entries":[
          {"from":1,"to":1,"p":{"h":0,"k":0,"coeffs":["1"],"bound":null},
                           "e":{"h":0,"k":0,"coeffs":["1"],"bound":null}},
          {"from":1,"to":2,"p":{"h":1,"k":1,"coeffs":["2"],"bound":{"delta":"1","G":1,"epsBar":1}},
                           "e":{"h":0,"k":0,"coeffs":["1"],"bound":null}},
          {"from":2,"to":1,"p":{"h":0,"k":0,"coeffs":["1"],"bound":null},
                           "e":{"h":0,"k":0,"coeffs":["1"],"bound":null}}]}"#;
        let m = SemiMarkovModel::from_json(doc).unwrap();
        let c = complete_remainders(&m).unwrap();
        let b = c.p(s(1), s(1)).unwrap().bound().unwrap();
        assert_eq!(b.g(), 3.0);
        let single = c.p(s(2), s(1)).unwrap().bound().unwrap();
        assert_eq!(single.g(), 0.0);
        assert_eq!(single.delta(), &int(1));
    }

    #[test]
    fn completion_needs_bounds_on_other_entries() {
        let text = FIXTURE.replacen(
            r#""bound": {
          "delta": "1/1",
          "G": 0.0,
          "epsBar": 1.0
        }"#,
            r#""bound": null"#,
            3,
        );
        let m = SemiMarkovModel::from_json(&text).unwrap();
        assert!(matches!(
            complete_remainders(&m),
            Err(ModelError::MissingBound { which: Quantity::P, .. })
        ));
    }

    #[test]
    fn polynomialized_rows_sum_to_one() {
        let m = polynomialized(&fixture()).unwrap();
        let p22 = m.p(s(2), s(2)).unwrap();
        assert_eq!(p22.coeffs(), &[int(1), int(-1), int(-1), int(-1)]);
        for &i in m.states() {
            for eps in [frac(1, 3), frac(1, 100)] {
                let total: Rational = m
                    .transition_set(i)
                    .iter()
                    .map(|&j| m.p(i, j).unwrap().evaluate(&eps).unwrap())
                    .sum();
                assert_eq!(total, int(1));
            }
        }
    }

    #[test]
    fn single_entry_threshold() {
        let doc = r#"{"N":1,"entries":[
          {"from":1,"to":1,"p":{"h":0,"k":0,"coeffs":["1/2"],"bound":{"delta":"1","G":1,"epsBar":1}},
                           "e":{"h":0,"k":0,"coeffs":["1"],"bound":{"delta":"1","G":0,"epsBar":1}}}]}"#;
        let m = SemiMarkovModel::from_json(doc).unwrap();
        let t = positivity_thresholds(&m, &Alpha::Uniform(frac(1, 4))).unwrap();
        assert_eq!(t.entries[0].eps_alpha_p, 0.125);
        assert_eq!(t.entries[0].eps_prime_p, 0.125);
        assert_eq!(t.eps_tilde0, 0.125);
    }

    #[test]
    fn exact_models_keep_eps0() {
        let m = polynomialized(&fixture()).unwrap();
        let t = positivity_thresholds(&m, &Alpha::Uniform(frac(1, 4))).unwrap();
        assert!(t.entries.iter().all(|e| e.eps_alpha_p == 1.0 && e.eps_alpha_e == 1.0));
        assert!(t.eps_tilde0 > 0.0 && t.eps_tilde0 <= 1.0);
    }

    #[test]
    fn alpha_must_lie_in_open_half_interval() {
        let m = fixture();
        for bad in [int(0), frac(1, 2), int(1)] {
            assert!(matches!(
                positivity_thresholds(&m, &Alpha::Uniform(bad)),
                Err(ModelError::InvalidAlpha { .. })
            ));
        }
        assert!(matches!(
            positivity_thresholds(&m, &Alpha::PerPair(BTreeMap::new())),
            Err(ModelError::InvalidAlpha { .. })
        ));
    }
}
