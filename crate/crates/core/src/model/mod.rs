//! Perturbed semi-Markov models.
//!
//! A model lists, for every pair `(i, j)` with `j ∈ Y_i`, an expansion of the
//! transition probability `p_ij(ε)` of the embedded chain and of the sojourn
//! expectation `e_ij(ε)`. Pairs that are absent are identically zero.
//!
//! States carry their original 1-based labels, so a model obtained by
//! excluding states keeps the labels of the survivors.

mod complete;
mod conditions;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::expansion::{ExpansionError, LaurentExpansion};

pub use complete::{
    complete_remainders, designated_entry, polynomialized, positivity_thresholds, Alpha,
    EntryThresholds, PositivityThresholds,
};
pub use conditions::{
    validate_conditions, ConnectivityReport, DeltaFloors, PivotFailure, RowCheck,
    Unreachable, ValidationReport,
};

/// 1-based state label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateIndex(u32);

impl StateIndex {
    pub fn new(label: u32) -> Option<Self> {
        (label >= 1).then_some(Self(label))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for tests and examples; panics on 0.
pub fn s(label: u32) -> StateIndex {
    StateIndex::new(label).expect("state labels start at 1")
}

/// Which expansion of a pair an error or check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    P,
    E,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::P => "p",
            Quantity::E => "e",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub p: LaurentExpansion,
    pub e: LaurentExpansion,
}

impl TransitionEntry {
    pub fn get(&self, q: Quantity) -> &LaurentExpansion {
        match q {
            Quantity::P => &self.p,
            Quantity::E => &self.e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Schema(String),
    #[error("ε₀ = {0} is outside (0, 1]")]
    InvalidEps0(f64),
    #[error("model has no states")]
    NoStates,
    #[error("state labels must be distinct positive integers")]
    InvalidStates,
    #[error("unknown state {0}")]
    UnknownState(u32),
    #[error("entry ({from}, {to}) refers to a state outside the phase space")]
    StateOutOfRange { from: u32, to: u32 },
    #[error("duplicate entry ({from}, {to})")]
    Duplicate { from: StateIndex, to: StateIndex },
    #[error("{which}_{from},{to} has nonpositive leading coefficient")]
    NonPositiveLeading {
        from: StateIndex,
        to: StateIndex,
        which: Quantity,
    },
    #[error("p_{from},{to} starts at ε^{h}; probabilities need h ≥ 0")]
    NegativeProbabilityOrder { from: StateIndex, to: StateIndex, h: i64 },
    #[error("{which}_{from},{to} has ε̄ = {eps_bar} beyond ε₀ = {eps0}")]
    BoundBeyondEps0 {
        from: StateIndex,
        to: StateIndex,
        which: Quantity,
        eps_bar: f64,
        eps0: f64,
    },
    #[error("transition set of state {0} is empty")]
    EmptyTransitionSet(StateIndex),
    #[error("{which}_{from},{to} carries no remainder bound")]
    MissingBound {
        from: StateIndex,
        to: StateIndex,
        which: Quantity,
    },
    #[error("α = {alpha} for ({from}, {to}) is outside (0, 1/2)")]
    InvalidAlpha {
        from: StateIndex,
        to: StateIndex,
        alpha: String,
    },
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

/// Immutable semi-Markov model with expansion-valued parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiMarkovModel {
    states: Vec<StateIndex>,
    eps0: f64,
    entries: BTreeMap<(StateIndex, StateIndex), TransitionEntry>,
}

impl SemiMarkovModel {
    /// Builds a model over `states` and checks the structural invariants:
    /// endpoints known, `p` Taylor (`h ≥ 0`), positive leading coefficients,
    /// `ε̄ ≤ ε₀` for every bound, and nonempty transition sets.
    pub fn new(
        states: Vec<StateIndex>,
        eps0: f64,
        entries: BTreeMap<(StateIndex, StateIndex), TransitionEntry>,
    ) -> Result<Self, ModelError> {
        if !(eps0 > 0.0 && eps0 <= 1.0) {
            return Err(ModelError::InvalidEps0(eps0));
        }
        if states.is_empty() {
            return Err(ModelError::NoStates);
        }
        let mut sorted = states;
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::InvalidStates);
        }
        let known: BTreeSet<StateIndex> = sorted.iter().copied().collect();
        for (&(i, j), entry) in &entries {
            if !known.contains(&i) || !known.contains(&j) {
                return Err(ModelError::StateOutOfRange {
                    from: i.get(),
                    to: j.get(),
                });
            }
            if entry.p.h() < 0 {
                return Err(ModelError::NegativeProbabilityOrder {
                    from: i,
                    to: j,
                    h: entry.p.h(),
                });
            }
            for q in [Quantity::P, Quantity::E] {
                let x = entry.get(q);
                if !x.leading().is_positive() {
                    return Err(ModelError::NonPositiveLeading {
                        from: i,
                        to: j,
                        which: q,
                    });
                }
                if let Some(b) = x.bound() {
                    if b.eps_bar() > eps0 {
                        return Err(ModelError::BoundBeyondEps0 {
                            from: i,
                            to: j,
                            which: q,
                            eps_bar: b.eps_bar(),
                            eps0,
                        });
                    }
                }
            }
        }
        let model = Self {
            states: sorted,
            eps0,
            entries,
        };
        for &i in &model.states {
            if model.transition_set(i).is_empty() {
                return Err(ModelError::EmptyTransitionSet(i));
            }
        }
        Ok(model)
    }

    /// Model over states `1..=n`.
    pub fn with_states(
        n: u32,
        eps0: f64,
        entries: BTreeMap<(StateIndex, StateIndex), TransitionEntry>,
    ) -> Result<Self, ModelError> {
        Self::new((1..=n).map(s).collect(), eps0, entries)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
        doc.into_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument::from_model(self)).expect("model serializes")
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateIndex] {
        &self.states
    }

    pub fn contains(&self, i: StateIndex) -> bool {
        self.states.binary_search(&i).is_ok()
    }

    pub fn require_state(&self, i: StateIndex) -> Result<(), ModelError> {
        if self.contains(i) {
            Ok(())
        } else {
            Err(ModelError::UnknownState(i.get()))
        }
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn entry(&self, i: StateIndex, j: StateIndex) -> Option<&TransitionEntry> {
        self.entries.get(&(i, j))
    }

    pub fn p(&self, i: StateIndex, j: StateIndex) -> Option<&LaurentExpansion> {
        self.entry(i, j).map(|e| &e.p)
    }

    pub fn e(&self, i: StateIndex, j: StateIndex) -> Option<&LaurentExpansion> {
        self.entry(i, j).map(|e| &e.e)
    }

    pub fn entries(&self) -> &BTreeMap<(StateIndex, StateIndex), TransitionEntry> {
        &self.entries
    }

    /// `Y_i`, ascending.
    pub fn transition_set(&self, i: StateIndex) -> Vec<StateIndex> {
        self.entries
            .range((i, StateIndex(1))..=(i, StateIndex(u32::MAX)))
            .map(|(&(_, j), _)| j)
            .collect()
    }

    pub(crate) fn map_entries(
        &self,
        mut f: impl FnMut(StateIndex, StateIndex, &TransitionEntry) -> Result<TransitionEntry, ModelError>,
    ) -> Result<Self, ModelError> {
        let entries = self
            .entries
            .iter()
            .map(|(&(i, j), e)| Ok(((i, j), f(i, j, e)?)))
            .collect::<Result<_, ModelError>>()?;
        Self::new(self.states.clone(), self.eps0, entries)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDocument {
    from: u32,
    to: u32,
    p: LaurentExpansion,
    e: LaurentExpansion,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    #[serde(rename = "N")]
    n: u32,
    #[serde(default = "default_eps0")]
    eps0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<u32>>,
    entries: Vec<EntryDocument>,
}

fn default_eps0() -> f64 {
    1.0
}

impl ModelDocument {
    fn into_model(self) -> Result<SemiMarkovModel, ModelError> {
        let states: Vec<StateIndex> = match self.states {
            Some(labels) => {
                if labels.len() != self.n as usize {
                    return Err(ModelError::Schema(format!(
                        "N = {} but {} state labels are listed",
                        self.n,
                        labels.len()
                    )));
                }
                labels
                    .into_iter()
                    .map(|l| StateIndex::new(l).ok_or(ModelError::InvalidStates))
                    .collect::<Result<_, _>>()?
            }
            None => (1..=self.n).map(StateIndex).collect(),
        };
        let known: BTreeSet<StateIndex> = states.iter().copied().collect();
        let mut entries = BTreeMap::new();
        for e in self.entries {
            let (i, j) = match (StateIndex::new(e.from), StateIndex::new(e.to)) {
                (Some(i), Some(j)) if known.contains(&i) && known.contains(&j) => (i, j),
                _ => {
                    return Err(ModelError::StateOutOfRange {
                        from: e.from,
                        to: e.to,
                    })
                }
            };
            let entry = TransitionEntry { p: e.p, e: e.e };
            if entries.insert((i, j), entry).is_some() {
                return Err(ModelError::Duplicate { from: i, to: j });
            }
        }
        SemiMarkovModel::new(states, self.eps0, entries)
    }

    fn from_model(m: &SemiMarkovModel) -> Self {
        let standard = m
            .states
            .iter()
            .enumerate()
            .all(|(idx, st)| st.0 as usize == idx + 1);
        Self {
            n: m.n() as u32,
            eps0: m.eps0,
            states: (!standard).then(|| m.states.iter().map(|st| st.0).collect()),
            entries: m
                .entries
                .iter()
                .map(|(&(i, j), e)| EntryDocument {
                    from: i.0,
                    to: j.0,
                    p: e.p.clone(),
                    e: e.e.clone(),
                })
                .collect(),
        }
    }
}

impl Serialize for SemiMarkovModel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ModelDocument::from_model(self).serialize(ser)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const FIXTURE: &str = include_str!("../../../../fixtures/silvestrov-3state.json");

    pub(crate) fn fixture() -> SemiMarkovModel {
        SemiMarkovModel::from_json(FIXTURE).unwrap()
    }

    fn entry_json(from: u32, to: u32, p: &str, e: &str) -> String {
        format!(
            r#"{{"from":{from},"to":{to},"p":{{"h":0,"k":0,"coeffs":["{p}"],"bound":null}},"e":{{"h":0,"k":0,"coeffs":["{e}"],"bound":null}}}}"#
        )
    }

    #[test]
    fn parses_fixture() {
        let m = fixture();
        assert_eq!(m.n(), 3);
        assert_eq!(m.eps0(), 1.0);
        assert_eq!(m.transition_set(s(1)), vec![s(1), s(2)]);
        assert_eq!(m.transition_set(s(2)), vec![s(1), s(2), s(3)]);
        assert_eq!(m.transition_set(s(3)), vec![s(1), s(2)]);
        assert!(m.p(s(3), s(3)).is_none());
    }

    #[test]
    fn round_trips_through_json() {
        let m = fixture();
        let again = SemiMarkovModel::from_json(&m.to_json()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn single_state_model_is_valid() {
        let doc = format!(r#"{{"N":1,"entries":[{}]}}"#, entry_json(1, 1, "1", "1"));
        let m = SemiMarkovModel::from_json(&doc).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.eps0(), 1.0);
    }

    #[test]
    fn rejects_structural_violations() {
        let missing_row = format!(r#"{{"N":2,"entries":[{}]}}"#, entry_json(1, 2, "1", "1"));
        assert_eq!(
            SemiMarkovModel::from_json(&missing_row),
            Err(ModelError::EmptyTransitionSet(s(2)))
        );

        let dup = format!(
            r#"{{"N":1,"entries":[{},{}]}}"#,
            entry_json(1, 1, "1", "1"),
            entry_json(1, 1, "1", "1")
        );
        assert!(matches!(
            SemiMarkovModel::from_json(&dup),
            Err(ModelError::Duplicate { .. })
        ));

        let negative = format!(r#"{{"N":1,"entries":[{}]}}"#, entry_json(1, 1, "1", "-1"));
        assert!(matches!(
            SemiMarkovModel::from_json(&negative),
            Err(ModelError::NonPositiveLeading { which: Quantity::E, .. })
        ));

        let out_of_range = format!(r#"{{"N":1,"entries":[{}]}}"#, entry_json(1, 2, "1", "1"));
        assert!(matches!(
            SemiMarkovModel::from_json(&out_of_range),
            Err(ModelError::StateOutOfRange { .. })
        ));

        let laurent_p = r#"{"N":1,"entries":[{"from":1,"to":1,
            "p":{"h":-1,"k":-1,"coeffs":["1"],"bound":null},
            "e":{"h":0,"k":0,"coeffs":["1"],"bound":null}}]}"#;
        assert!(matches!(
            SemiMarkovModel::from_json(laurent_p),
            Err(ModelError::NegativeProbabilityOrder { h: -1, .. })
        ));

        let bad_eps0 = format!(r#"{{"N":1,"eps0":1.5,"entries":[{}]}}"#, entry_json(1, 1, "1", "1"));
        assert_eq!(SemiMarkovModel::from_json(&bad_eps0), Err(ModelError::InvalidEps0(1.5)));

        assert!(matches!(
            SemiMarkovModel::from_json("{\"N\": 1}"),
            Err(ModelError::Schema(_))
        ));
    }

    #[test]
    fn custom_state_labels_survive_round_trip() {
        let doc = format!(
            r#"{{"N":2,"states":[2,5],"entries":[{},{}]}}"#,
            entry_json(2, 5, "1", "1"),
            entry_json(5, 2, "1", "1")
        );
        let m = SemiMarkovModel::from_json(&doc).unwrap();
        assert_eq!(m.states(), &[s(2), s(5)]);
        assert_eq!(SemiMarkovModel::from_json(&m.to_json()).unwrap(), m);
    }
}
