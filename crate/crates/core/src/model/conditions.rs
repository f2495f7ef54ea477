//! Structural checks on a parsed model. Every verdict is returned as data.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::Serialize;

use super::{Quantity, SemiMarkovModel, StateIndex};
use crate::rational::{serde_str, Rational};

/// `j` cannot be reached from `i`; `reachable` lists every state that can,
/// which is the witness that no chain of transitions leads to `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unreachable {
    pub from: StateIndex,
    pub to: StateIndex,
    pub reachable: Vec<StateIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConnectivityReport {
    pub strongly_connected: bool,
    pub failures: Vec<Unreachable>,
}

/// Coefficient sums `Σ_{j∈Y_i} a_ij[l]` for `0 ≤ l ≤ min_j l⁺_ij`, which must
/// equal 1 at `l = 0` and vanish above.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RowCheck {
    pub state: StateIndex,
    /// `l⁺_{i,Y_i}`.
    pub order: i64,
    /// `l⁻_{i,Y_i}`, which must be 0.
    pub lowest_order: i64,
    #[serde(serialize_with = "serialize_sums")]
    pub sums: Vec<(i64, Rational)>,
    pub failed_orders: Vec<i64>,
}

impl RowCheck {
    pub fn passed(&self) -> bool {
        self.failed_orders.is_empty() && self.lowest_order == 0
    }
}

fn serialize_sums<S: serde::Serializer>(sums: &[(i64, Rational)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    #[derive(Serialize)]
    struct Sum<'a> {
        l: i64,
        #[serde(with = "serde_str")]
        sum: &'a Rational,
    }
    let mut seq = s.serialize_seq(Some(sums.len()))?;
    for (l, sum) in sums {
        seq.serialize_element(&Sum { l: *l, sum })?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotFailure {
    pub from: StateIndex,
    pub to: StateIndex,
    pub which: Quantity,
}

/// `δ°` (minimum over probability bounds) and `δ*` (minimum over probability
/// and expectation bounds). Both default to 1 when no bound is present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaFloors {
    #[serde(rename = "deltaCirc", with = "serde_str")]
    pub delta_circ: Rational,
    #[serde(rename = "deltaStar", with = "serde_str")]
    pub delta_star: Rational,
}

impl DeltaFloors {
    pub fn of(m: &SemiMarkovModel) -> Self {
        let min_over = |q: Quantity| {
            m.entries()
                .values()
                .filter_map(|e| e.get(q).bound().map(|b| b.delta().clone()))
                .min()
        };
        let one = Rational::one();
        let delta_circ = min_over(Quantity::P).unwrap_or_else(|| one.clone()).min(one);
        let delta_star = min_over(Quantity::E)
            .map_or_else(|| delta_circ.clone(), |d| d.min(delta_circ.clone()));
        Self {
            delta_circ,
            delta_star,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub connectivity: ConnectivityReport,
    pub rows: Vec<RowCheck>,
    pub pivotality: Vec<PivotFailure>,
    #[serde(rename = "deltaFloors")]
    pub delta_floors: DeltaFloors,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.connectivity.strongly_connected
            && self.rows.iter().all(RowCheck::passed)
            && self.pivotality.is_empty()
    }

    /// `(i, l, Σ_j a_ij[l])` for every failed coefficient sum.
    pub fn stochasticity_failures(&self) -> Vec<(StateIndex, i64, Rational)> {
        self.rows
            .iter()
            .flat_map(|r| {
                r.failed_orders.iter().map(move |&l| {
                    let sum = r.sums.iter().find(|(ll, _)| *ll == l).unwrap().1.clone();
                    (r.state, l, sum)
                })
            })
            .collect()
    }
}

fn reachable_from(m: &SemiMarkovModel, start: StateIndex) -> BTreeSet<StateIndex> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for j in m.transition_set(i) {
            if seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    seen
}

fn connectivity(m: &SemiMarkovModel) -> ConnectivityReport {
    let mut failures = Vec::new();
    for &i in m.states() {
        let reach = reachable_from(m, i);
        for &j in m.states() {
            if !reach.contains(&j) {
                failures.push(Unreachable {
                    from: i,
                    to: j,
                    reachable: reach.iter().copied().collect(),
                });
            }
        }
    }
    ConnectivityReport {
        strongly_connected: failures.is_empty(),
        failures,
    }
}

fn row_check(m: &SemiMarkovModel, i: StateIndex) -> RowCheck {
    let ys = m.transition_set(i);
    let ps: Vec<_> = ys.iter().map(|&j| m.p(i, j).unwrap()).collect();
    let order = ps.iter().map(|p| p.k()).min().unwrap();
    let lowest_order = ps.iter().map(|p| p.h()).min().unwrap();
    let mut sums = Vec::new();
    let mut failed_orders = Vec::new();
    for l in 0..=order {
        let sum: Rational = ps.iter().map(|p| p.coeff(l)).sum();
        let expected = if l == 0 { Rational::one() } else { Rational::zero() };
        if sum != expected {
            failed_orders.push(l);
        }
        sums.push((l, sum));
    }
    RowCheck {
        state: i,
        order,
        lowest_order,
        sums,
        failed_orders,
    }
}

/// Checks strong connectivity of the transition graph, the coefficient
/// identities of each row, `l⁻_{i,Y_i} = 0`, positivity of leading
/// coefficients, and computes the δ floors.
pub fn validate_conditions(m: &SemiMarkovModel) -> ValidationReport {
    let pivotality = m
        .entries()
        .iter()
        .flat_map(|(&(i, j), e)| {
            [Quantity::P, Quantity::E]
                .into_iter()
                .filter(move |&q| e.get(q).leading() <= &Rational::zero())
                .map(move |which| PivotFailure { from: i, to: j, which })
        })
        .collect();
    ValidationReport {
        connectivity: connectivity(m),
        rows: m.states().iter().map(|&i| row_check(m, i)).collect(),
        pivotality,
        delta_floors: DeltaFloors::of(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::s;
    use crate::model::tests::{fixture, FIXTURE};
    use crate::rational::{frac, int};

    #[test]
    fn fixture_passes() {
        let m = fixture();
        let r = validate_conditions(&m);
        assert!(r.passed(), "{r:?}");
        let row1 = &r.rows[0];
        assert_eq!(row1.order, 3);
        assert_eq!(
            row1.sums,
            vec![(0, int(1)), (1, int(0)), (2, int(0)), (3, int(0))]
        );
        assert_eq!(r.rows[1].order, 2);
        assert_eq!(r.delta_floors.delta_circ, int(1));
        assert_eq!(r.delta_floors.delta_star, int(1));
    }

    #[test]
    fn broken_row_sum_is_located() {
        let text = FIXTURE.replacen("\"1/2\"", "\"2/5\"", 1);
        let m = SemiMarkovModel::from_json(&text).unwrap();
        let r = validate_conditions(&m);
        assert!(!r.passed());
        // The first "1/2" is a_21[1].
        assert_eq!(r.stochasticity_failures(), vec![(s(2), 1, frac(-1, 10))]);
    }

    #[test]
    fn disconnected_model_reports_witness() {
        let text = r#"{"N":2,"entries":[
            {"from":1,"to":1,"p":{"h":0,"k":0,"coeffs":["1"],"bound":null},"e":{"h":0,"k":0,"coeffs":["1"],"bound":null}},
            {"from":2,"to":1,"p":{"h":0,"k":0,"coeffs":["1"],"bound":null},"e":{"h":0,"k":0,"coeffs":["1"],"bound":null}}]}"#;
        let m = SemiMarkovModel::from_json(text).unwrap();
        let r = validate_conditions(&m);
        assert!(!r.connectivity.strongly_connected);
        assert_eq!(
            r.connectivity.failures,
            vec![Unreachable {
                from: s(1),
                to: s(2),
                reachable: vec![s(1)]
            }]
        );
        assert_eq!(r.delta_floors.delta_star, int(1));
    }

    #[test]
    fn delta_floors_take_minima() {
        let text = FIXTURE.replacen("\"delta\": \"1/1\"", "\"delta\": \"3/4\"", 1);
        let m = SemiMarkovModel::from_json(&text).unwrap();
        let f = DeltaFloors::of(&m);
        assert_eq!(f.delta_circ, frac(3, 4));
        assert_eq!(f.delta_star, frac(3, 4));
        // Second bound in the file is e_11.
        let text = FIXTURE
            .replacen("\"delta\": \"1/1\"", "\"delta\": \"X\"", 1)
            .replacen("\"delta\": \"1/1\"", "\"delta\": \"1/3\"", 1)
            .replacen("\"delta\": \"X\"", "\"delta\": \"1/1\"", 1);
        let m = SemiMarkovModel::from_json(&text).unwrap();
        let f = DeltaFloors::of(&m);
        assert_eq!(f.delta_circ, int(1));
        assert_eq!(f.delta_star, frac(1, 3));
    }
}
