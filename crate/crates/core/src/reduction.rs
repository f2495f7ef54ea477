//! Phase-space reduction.
//!
//! Excluding a state `r` yields a semi-Markov process on the remaining states
//! with the same hitting-time characteristics. Applied repeatedly it leaves a
//! single state `i`, whose sojourn expectation is the expected return time
//! `E_ii`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use serde::Serialize;

use crate::expansion::{
    add, mul, prod_many, reciprocal, scale, sum_many, ExpansionError, LaurentExpansion,
};
use crate::model::{DeltaFloors, ModelError, SemiMarkovModel, StateIndex, TransitionEntry};
use crate::rational::{serde_str, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("a single-state model cannot be reduced further")]
    SingleState,
    #[error("state {0} is not in the model")]
    UnknownState(StateIndex),
    #[error("state {0} is absorbing: it has no transitions to other states")]
    Absorbing(StateIndex),
    #[error("exclusion order {given:?} is not a permutation of {expected:?}")]
    InvalidOrder {
        given: Vec<StateIndex>,
        expected: Vec<StateIndex>,
    },
    #[error("pairwise hitting times need two distinct states, got {0} twice")]
    SameState(StateIndex),
    #[error("no transition from {from} to {to} in the two-state model")]
    MissingTransition { from: StateIndex, to: StateIndex },
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn require(m: &SemiMarkovModel, i: StateIndex) -> Result<(), ReductionError> {
    if m.contains(i) {
        Ok(())
    } else {
        Err(ReductionError::UnknownState(i))
    }
}

/// Non-absorption probability `1 − p_rr` of a state together with what is
/// needed to divide by it.
struct NonAbsorption {
    expansion: LaurentExpansion,
    /// `None` when `r ∉ Y_r`: the probability is identically 1 and quotients
    /// by it are the numerators themselves.
    reciprocal: Option<LaurentExpansion>,
}

impl NonAbsorption {
    fn of(m: &SemiMarkovModel, r: StateIndex) -> Result<Self, ReductionError> {
        let expansion = non_absorption(m, r)?;
        let reciprocal = if m.p(r, r).is_some() {
            Some(reciprocal(&expansion)?)
        } else {
            None
        };
        Ok(Self {
            expansion,
            reciprocal,
        })
    }

    fn quotient(&self, x: &LaurentExpansion) -> LaurentExpansion {
        match &self.reciprocal {
            Some(r) => mul(x, r),
            None => x.clone(),
        }
    }
}

/// `1 − p_rr(ε)`.
///
/// When `r ∈ Y_r` it is computed both as `Σ_{j∈Y_r∖{r}} p_rj` and as
/// `1 − p_rr`, and the two are merged, keeping the longer expansion and
/// certifying that coefficients agree. Otherwise it is the constant 1.
pub fn non_absorption(m: &SemiMarkovModel, r: StateIndex) -> Result<LaurentExpansion, ReductionError> {
    require(m, r)?;
    let Some(p_rr) = m.p(r, r) else {
        return Ok(LaurentExpansion::embed_constant_with(Rational::one(), 0, 0, m.eps0())?);
    };
    let leaving: Vec<LaurentExpansion> = m
        .transition_set(r)
        .into_iter()
        .filter(|&j| j != r)
        .map(|j| m.p(r, j).unwrap().clone())
        .collect();
    if leaving.is_empty() {
        return Err(ReductionError::Absorbing(r));
    }
    let by_sum = sum_many(&leaving)?;
    let one = LaurentExpansion::embed_constant_with(Rational::one(), 0, p_rr.k(), m.eps0())?;
    let by_complement = add(&one, &scale(&-Rational::one(), p_rr));
    Ok(LaurentExpansion::combine_representations(&by_complement, &by_sum)?)
}

/// One exclusion: the state removed, its non-absorption probability, and the
/// reduced model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionStep {
    pub excluded: StateIndex,
    #[serde(rename = "barP")]
    pub bar_p: LaurentExpansion,
    pub model: SemiMarkovModel,
}

/// Excludes `r`:
///
/// ```text
/// _r p_ij = p_ij + p_ir · p_rj / p̄_rr
/// _r e_ij = e_ij + e_ir · p_rj / p̄_rr + e_rr · (p_ir / p̄_rr)(p_rj / p̄_rr) + e_rj · p_ir / p̄_rr
/// ```
///
/// Quotients are formed first, then products (the triple product in one
/// multiple multiplication), then sums. Terms whose factors are absent
/// vanish and are left out. `_r Y_i = (Y_i ∖ {r}) ∪ (Y_r ∖ {r})` if `r ∈ Y_i`.
pub fn reduce_state(m: &SemiMarkovModel, r: StateIndex) -> Result<ReductionStep, ReductionError> {
    require(m, r)?;
    if m.n() == 1 {
        return Err(ReductionError::SingleState);
    }
    let bar = NonAbsorption::of(m, r)?;
    let targets: Vec<StateIndex> = m.transition_set(r).into_iter().filter(|&j| j != r).collect();
    let sources: Vec<StateIndex> = m
        .states()
        .iter()
        .copied()
        .filter(|&i| i != r && m.p(i, r).is_some())
        .collect();
    let from_r: BTreeMap<StateIndex, LaurentExpansion> = targets
        .iter()
        .map(|&j| (j, bar.quotient(m.p(r, j).unwrap())))
        .collect();
    let into_r: BTreeMap<StateIndex, LaurentExpansion> = sources
        .iter()
        .map(|&i| (i, bar.quotient(m.p(i, r).unwrap())))
        .collect();

    let mut entries = BTreeMap::new();
    for &i in m.states().iter().filter(|&&i| i != r) {
        let mut reach: BTreeSet<StateIndex> =
            m.transition_set(i).into_iter().filter(|&j| j != r).collect();
        if into_r.contains_key(&i) {
            reach.extend(targets.iter().copied());
        }
        for j in reach {
            let direct = m.entry(i, j);
            let via = into_r.get(&i).and(from_r.get(&j));

            let p = match (direct, via) {
                (Some(d), Some(q_rj)) => add(&d.p, &mul(m.p(i, r).unwrap(), q_rj)),
                (Some(d), None) => d.p.clone(),
                (None, Some(q_rj)) => mul(m.p(i, r).unwrap(), q_rj),
                (None, None) => unreachable!("j is in the reduced transition set"),
            };

            let mut e_terms = Vec::with_capacity(4);
            if let Some(d) = direct {
                e_terms.push(d.e.clone());
            }
            if let Some(q_rj) = via {
                let q_ir = &into_r[&i];
                e_terms.push(mul(m.e(i, r).unwrap(), q_rj));
                if let Some(e_rr) = m.e(r, r) {
                    e_terms.push(prod_many(&[e_rr.clone(), q_ir.clone(), q_rj.clone()])?);
                }
                e_terms.push(mul(m.e(r, j).unwrap(), q_ir));
            }
            let e = sum_many(&e_terms)?;
            entries.insert((i, j), TransitionEntry { p, e });
        }
    }
    let states = m.states().iter().copied().filter(|&i| i != r).collect();
    Ok(ReductionStep {
        excluded: r,
        bar_p: bar.expansion,
        model: SemiMarkovModel::new(states, m.eps0(), entries)?,
    })
}

/// Applies [`reduce_state`] along `order`, returning every intermediate step.
pub fn reduce_sequence(
    m: &SemiMarkovModel,
    order: &[StateIndex],
) -> Result<Vec<ReductionStep>, ReductionError> {
    let mut steps: Vec<ReductionStep> = Vec::with_capacity(order.len());
    for &r in order {
        let current = steps.last().map_or(m, |s| &s.model);
        let step = reduce_state(current, r)?;
        steps.push(step);
    }
    Ok(steps)
}

/// Expected return time `E_ii` with the reduction that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingResult {
    pub target: StateIndex,
    #[serde(rename = "exclusionOrder")]
    pub exclusion_order: Vec<StateIndex>,
    pub expansion: LaurentExpansion,
    #[serde(rename = "deltaStar", with = "serde_str")]
    pub delta_star: Rational,
    /// The bound rewritten at the model's `δ*`, when a bound is present.
    #[serde(rename = "deltaStarRebased")]
    pub delta_star_rebased: Option<LaurentExpansion>,
    #[serde(skip)]
    pub steps: Vec<ReductionStep>,
}

fn check_order(
    m: &SemiMarkovModel,
    keep: &[StateIndex],
    order: Option<&[StateIndex]>,
) -> Result<Vec<StateIndex>, ReductionError> {
    let expected: Vec<StateIndex> = m
        .states()
        .iter()
        .copied()
        .filter(|s| !keep.contains(s))
        .collect();
    match order {
        None => Ok(expected),
        Some(given) => {
            let mut sorted = given.to_vec();
            sorted.sort();
            if sorted == expected {
                Ok(given.to_vec())
            } else {
                Err(ReductionError::InvalidOrder {
                    given: given.to_vec(),
                    expected,
                })
            }
        }
    }
}

/// `E_ii` by excluding every other state along `order` (ascending labels by
/// default). Coefficients do not depend on the order; bounds may.
pub fn hitting_time(
    m: &SemiMarkovModel,
    i: StateIndex,
    order: Option<&[StateIndex]>,
) -> Result<HittingResult, ReductionError> {
    require(m, i)?;
    let order = check_order(m, &[i], order)?;
    let steps = reduce_sequence(m, &order)?;
    let last = steps.last().map_or(m, |s| &s.model);
    let expansion = last
        .e(i, i)
        .ok_or(ReductionError::MissingTransition { from: i, to: i })?
        .clone();
    let delta_star = DeltaFloors::of(m).delta_star;
    let delta_star_rebased = match expansion.bound() {
        Some(_) => Some(expansion.rebase_delta(&delta_star)?),
        None => None,
    };
    Ok(HittingResult {
        target: i,
        exclusion_order: order,
        expansion,
        delta_star,
        delta_star_rebased,
        steps,
    })
}

/// `E_ij`, `E_ji`, `E_ii`, `E_jj` from the two-state model left after
/// excluding every other state in ascending order:
///
/// ```text
/// E_{i'j'} = e_{i'} / (1 − p_{i'i'}),
/// E_{j'j'} = e_{j'} + e_{i'} · p_{j'i'} / (1 − p_{i'i'}),
/// e_{i'} = e_{i'i'} + e_{i'j'}
/// ```
pub fn pairwise_hitting(
    m: &SemiMarkovModel,
    i: StateIndex,
    j: StateIndex,
) -> Result<BTreeMap<(StateIndex, StateIndex), LaurentExpansion>, ReductionError> {
    require(m, i)?;
    require(m, j)?;
    if i == j {
        return Err(ReductionError::SameState(i));
    }
    let order = check_order(m, &[i, j], None)?;
    let steps = reduce_sequence(m, &order)?;
    let two = steps.last().map_or(m, |s| &s.model);

    let sojourn = |a: StateIndex| -> Result<LaurentExpansion, ReductionError> {
        let terms: Vec<LaurentExpansion> = two
            .transition_set(a)
            .into_iter()
            .map(|b| two.e(a, b).unwrap().clone())
            .collect();
        Ok(sum_many(&terms)?)
    };
    let e = BTreeMap::from([(i, sojourn(i)?), (j, sojourn(j)?)]);

    let mut out = BTreeMap::new();
    for (a, b) in [(i, j), (j, i)] {
        let bar = NonAbsorption::of(two, a)?;
        out.insert((a, b), bar.quotient(&e[&a]));
        let p_ba = two
            .p(b, a)
            .ok_or(ReductionError::MissingTransition { from: b, to: a })?;
        let back = mul(&e[&a], &bar.quotient(p_ba));
        out.insert((b, b), sum_many(&[e[&b].clone(), back])?);
    }
    Ok(out)
}
