//! Stationary distributions `π_i(ε) = e_i(ε) / E_ii(ε)`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::expansion::{add, div, scale, sum_many, LaurentExpansion};
use crate::model::{DeltaFloors, SemiMarkovModel, StateIndex};
use crate::rational::{serde_str, serde_str_map, Rational};
use crate::reduction::{hitting_time, ReductionError};

/// `e_i = Σ_{j∈Y_i} e_ij`, the expected sojourn time in `i`.
pub fn sojourn_expectation(m: &SemiMarkovModel, i: StateIndex) -> Result<LaurentExpansion, ReductionError> {
    m.require_state(i)?;
    let terms: Vec<LaurentExpansion> = m
        .transition_set(i)
        .into_iter()
        .map(|j| m.e(i, j).unwrap().clone())
        .collect();
    Ok(sum_many(&terms)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryState {
    pub state: StateIndex,
    pub expansion: LaurentExpansion,
    /// The bound rewritten at the model's `δ*`, when a bound is present.
    pub rebased: Option<LaurentExpansion>,
    pub sojourn: LaurentExpansion,
    pub hitting: LaurentExpansion,
    #[serde(rename = "exclusionOrder")]
    pub exclusion_order: Vec<StateIndex>,
}

/// `π_i = e_i / E_ii` with `E_ii` from sequential reduction along `order`.
pub fn stationary(
    m: &SemiMarkovModel,
    i: StateIndex,
    order: Option<&[StateIndex]>,
) -> Result<StationaryState, ReductionError> {
    let sojourn = sojourn_expectation(m, i)?;
    let hit = hitting_time(m, i, order)?;
    let expansion = div(&sojourn, &hit.expansion)?;
    let rebased = match expansion.bound() {
        Some(_) => Some(expansion.rebase_delta(&DeltaFloors::of(m).delta_star)?),
        None => None,
    };
    Ok(StationaryState {
        state: i,
        expansion,
        rebased,
        sojourn,
        hitting: hit.expansion,
        exclusion_order: hit.exclusion_order,
    })
}

/// Coefficient identities across states: over `0..=min_i n⁺_i` the
/// coefficients of `Σ_i π_i` must be `1, 0, 0, …`; and `1 − Σ_{j≠i} π_j` must
/// reproduce `π_i` for the designated state `i` (the first one).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    /// Highest power of the common retained range `0..=top`.
    pub top: i64,
    #[serde(rename = "zeroOrderSum", with = "serde_str")]
    pub zero_order_sum: Rational,
    #[serde(rename = "higherOrderSums", serialize_with = "serde_str_map::serialize")]
    pub higher_order_sums: BTreeMap<i64, Rational>,
    #[serde(rename = "sumsConsistent")]
    pub sums_consistent: bool,
    #[serde(rename = "complementState")]
    pub complement_state: StateIndex,
    pub complement: LaurentExpansion,
    /// Powers where the complement form and the direct form differ.
    #[serde(rename = "complementMismatches")]
    pub complement_mismatches: Vec<i64>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.sums_consistent && self.complement_mismatches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryResult {
    #[serde(rename = "perState")]
    pub per_state: BTreeMap<StateIndex, StationaryState>,
    #[serde(rename = "deltaStar", with = "serde_str")]
    pub delta_star: Rational,
    pub consistency: ConsistencyReport,
}

impl StationaryResult {
    pub fn expansion(&self, i: StateIndex) -> Option<&LaurentExpansion> {
        self.per_state.get(&i).map(|s| &s.expansion)
    }
}

/// `π_i` for every state, plus the consistency diagnostics. `orders` may give
/// an exclusion order per target; others use ascending labels.
pub fn stationary_all(
    m: &SemiMarkovModel,
    orders: Option<&BTreeMap<StateIndex, Vec<StateIndex>>>,
) -> Result<StationaryResult, ReductionError> {
    let mut per_state = BTreeMap::new();
    for &i in m.states() {
        let order = orders.and_then(|o| o.get(&i)).map(Vec::as_slice);
        per_state.insert(i, stationary(m, i, order)?);
    }
    let consistency = consistency(m, &per_state)?;
    Ok(StationaryResult {
        per_state,
        delta_star: DeltaFloors::of(m).delta_star,
        consistency,
    })
}

fn consistency(
    m: &SemiMarkovModel,
    per_state: &BTreeMap<StateIndex, StationaryState>,
) -> Result<ConsistencyReport, ReductionError> {
    let pis: Vec<&LaurentExpansion> = per_state.values().map(|s| &s.expansion).collect();
    let top = pis.iter().map(|p| p.k()).min().unwrap();
    let sum_at = |l: i64| -> Rational { pis.iter().map(|p| p.coeff(l)).sum() };
    let zero_order_sum = sum_at(0);
    let higher_order_sums: BTreeMap<i64, Rational> = (1..=top).map(|l| (l, sum_at(l))).collect();
    let sums_consistent =
        zero_order_sum.is_one() && higher_order_sums.values().all(Zero::is_zero);

    let designated = m.states()[0];
    let others: Vec<LaurentExpansion> = per_state
        .iter()
        .filter(|(&j, _)| j != designated)
        .map(|(_, s)| s.expansion.clone())
        .collect();
    let complement = if others.is_empty() {
        LaurentExpansion::embed_constant_with(Rational::one(), 0, 0, m.eps0())?
    } else {
        let rest = sum_many(&others)?;
        let one = LaurentExpansion::embed_constant_with(Rational::one(), 0, rest.k().max(0), m.eps0())?;
        add(&one, &scale(&-Rational::one(), &rest))
    };
    let direct = &per_state[&designated].expansion;
    let complement_mismatches = (0..=complement.k().min(direct.k()))
        .filter(|&l| complement.coeff(l) != direct.coeff(l))
        .collect();
    Ok(ConsistencyReport {
        top,
        zero_order_sum,
        higher_order_sums,
        sums_consistent,
        complement_state: designated,
        complement,
        complement_mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::s;
    use crate::model::tests::fixture;
    use crate::rational::{frac, int};

    #[test]
    fn sojourn_expectations_of_fixture() {
        let m = fixture();
        let e3 = sojourn_expectation(&m, s(3)).unwrap();
        assert_eq!((e3.h(), e3.k()), (-1, 0));
        assert_eq!(e3.coeffs(), &[int(3), int(1)]);
        let e2 = sojourn_expectation(&m, s(2)).unwrap();
        assert_eq!((e2.h(), e2.k()), (0, 2));
        assert_eq!(e2.coeffs(), &[int(3), int(1), int(2)]);
    }

    #[test]
    fn fixture_stationary_distribution() {
        let r = stationary_all(&fixture(), None).unwrap();
        let pi = |i| r.expansion(s(i)).unwrap().coeffs().to_vec();
        assert_eq!(pi(1), vec![frac(1, 7), frac(6, 147)]);
        assert_eq!(pi(2), vec![frac(4, 7), frac(-32, 147)]);
        assert_eq!(pi(3), vec![frac(2, 7), frac(26, 147)]);
        assert!(r.consistency.passed(), "{:?}", r.consistency);
        assert_eq!(r.consistency.zero_order_sum, int(1));
        assert_eq!(r.consistency.higher_order_sums[&1], int(0));
    }

    #[test]
    fn single_state_is_certain() {
        let doc = r#"{"N":1,"entries":[{"from":1,"to":1,
            "p":{"h":0,"k":0,"coeffs":["1"],"bound":null},
            "e":{"h":0,"k":1,"coeffs":["2","5"],"bound":null}}]}"#;
        let m = SemiMarkovModel::from_json(doc).unwrap();
        let r = stationary_all(&m, None).unwrap();
        assert_eq!(r.expansion(s(1)).unwrap().coeffs(), &[int(1), int(0)]);
        assert!(r.consistency.passed());
    }

    #[test]
    fn serializes_to_json() {
        let r = stationary_all(&fixture(), None).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["perState"]["1"]["expansion"]["coeffs"][0], "1/7");
        assert_eq!(v["consistency"]["zeroOrderSum"], "1/1");
        assert_eq!(v["consistency"]["higherOrderSums"]["1"], "0/1");
    }
}
