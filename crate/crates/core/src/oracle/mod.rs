//! Independent ground truth at concrete values of ε.
//!
//! A model is instantiated at a rational ε by evaluating the retained
//! polynomial parts, after which stationary distributions and hitting times
//! are obtained by exact linear algebra. Nothing here uses the expansion
//! calculus, so agreement between the two is a genuine cross-check.

mod linalg;

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::expansion::LaurentExpansion;
use crate::model::{SemiMarkovModel, StateIndex};
use crate::rational::{format_rational, from_f64, serde_str, to_f64, Rational};

pub use linalg::solve;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("ε must be positive, got {0}")]
    NonPositiveEpsilon(String),
    #[error("ε = {eps} exceeds ε₀ = {eps0}")]
    EpsilonAboveEps0 { eps: String, eps0: f64 },
    #[error("row {state} of the transition matrix sums to {sum}, not 1")]
    RowSum { state: StateIndex, sum: String },
    #[error("linear system is singular (transition matrix is reducible)")]
    Singular,
    #[error("state {0} is not in the model")]
    UnknownState(StateIndex),
    #[error("expansion carries no remainder bound")]
    MissingBound,
    #[error("sample ε = {eps} lies beyond ε̄ = {eps_bar}")]
    SampleBeyondEpsBar { eps: String, eps_bar: f64 },
}

/// A model evaluated at one `ε`: transition matrix `P` and expectation
/// matrix `E`, indexed by position in `states`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericModel {
    pub eps: Rational,
    pub states: Vec<StateIndex>,
    pub p: Vec<Vec<Rational>>,
    pub e: Vec<Vec<Rational>>,
    /// Some entry had a nonzero remainder bound, so the matrices only
    /// approximate the model's functions.
    pub approximate: bool,
}

impl NumericModel {
    fn index(&self, i: StateIndex) -> Result<usize, OracleError> {
        self.states.binary_search(&i).map_err(|_| OracleError::UnknownState(i))
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    /// `e_i = Σ_j E_ij`.
    pub fn sojourn(&self, k: usize) -> Rational {
        self.e[k].iter().sum()
    }
}

/// Evaluates every entry at `eps ∈ (0, ε₀]`.
///
/// A model all of whose bounds are exact (`G = 0`) is required to be
/// stochastic at `eps`; otherwise the result is flagged approximate.
pub fn instantiate(m: &SemiMarkovModel, eps: &Rational) -> Result<NumericModel, OracleError> {
    if !eps.is_positive() {
        return Err(OracleError::NonPositiveEpsilon(format_rational(eps)));
    }
    if to_f64(eps) > m.eps0() {
        return Err(OracleError::EpsilonAboveEps0 {
            eps: format_rational(eps),
            eps0: m.eps0(),
        });
    }
    let states = m.states().to_vec();
    let n = states.len();
    let mut p = vec![vec![Rational::zero(); n]; n];
    let mut e = vec![vec![Rational::zero(); n]; n];
    let mut approximate = false;
    for (&(i, j), entry) in m.entries() {
        let (a, b) = (
            states.binary_search(&i).unwrap(),
            states.binary_search(&j).unwrap(),
        );
        p[a][b] = entry.p.evaluate_unchecked(eps);
        e[a][b] = entry.e.evaluate_unchecked(eps);
        approximate |= [&entry.p, &entry.e]
            .iter()
            .any(|x| x.bound().is_none_or(|bd| !bd.is_exact()));
    }
    if !approximate {
        for (a, row) in p.iter().enumerate() {
            let sum: Rational = row.iter().sum();
            if !sum.is_one() {
                return Err(OracleError::RowSum {
                    state: states[a],
                    sum: format_rational(&sum),
                });
            }
        }
    }
    Ok(NumericModel {
        eps: eps.clone(),
        states,
        p,
        e,
        approximate,
    })
}

/// Stationary distribution of the semi-Markov process: `π_i ∝ ρ_i e_i` with
/// `ρ` the stationary vector of the embedded chain (`ρP = ρ`, `Σρ = 1`).
pub fn numeric_stationary(nm: &NumericModel) -> Result<Vec<Rational>, OracleError> {
    let n = nm.n();
    // Rows of (P − I)ᵀ, with the last equation replaced by Σρ = 1.
    let mut a = vec![vec![Rational::zero(); n]; n];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = nm.p[c][r].clone();
            if r == c {
                *cell -= Rational::one();
            }
        }
    }
    let mut b = vec![Rational::zero(); n];
    a[n - 1] = vec![Rational::one(); n];
    b[n - 1] = Rational::one();
    let rho = solve(a, b).ok_or(OracleError::Singular)?;
    let weights: Vec<Rational> = rho.iter().enumerate().map(|(k, r)| r * nm.sojourn(k)).collect();
    let total: Rational = weights.iter().sum();
    if total.is_zero() {
        return Err(OracleError::Singular);
    }
    Ok(weights.into_iter().map(|w| w / &total).collect())
}

/// Expected hitting times `E_ki` of `i` from every state `k` (`E_ii` being
/// the return time), from the first-step equations
/// `E_ki = e_k + Σ_{j≠i} p_kj E_ji`.
pub fn numeric_hitting_all(nm: &NumericModel, i: StateIndex) -> Result<Vec<Rational>, OracleError> {
    let target = nm.index(i)?;
    let n = nm.n();
    let mut a = vec![vec![Rational::zero(); n]; n];
    let mut b = vec![Rational::zero(); n];
    for (k, (row, rhs)) in a.iter_mut().zip(&mut b).enumerate() {
        *rhs = nm.sojourn(k);
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = if j == target { Rational::zero() } else { -nm.p[k][j].clone() };
            if j == k {
                *cell += Rational::one();
            }
        }
    }
    solve(a, b).ok_or(OracleError::Singular)
}

/// `E_ii`.
pub fn numeric_hitting(nm: &NumericModel, i: StateIndex) -> Result<Rational, OracleError> {
    let all = numeric_hitting_all(nm, i)?;
    Ok(all[nm.index(i)?].clone())
}

/// Hitting times `E_ij` for every ordered pair.
pub fn numeric_hitting_matrix(
    nm: &NumericModel,
) -> Result<BTreeMap<(StateIndex, StateIndex), Rational>, OracleError> {
    let mut out = BTreeMap::new();
    for &j in &nm.states {
        for (k, v) in numeric_hitting_all(nm, j)?.into_iter().enumerate() {
            out.insert((nm.states[k], j), v);
        }
    }
    Ok(out)
}

/// Excludes state `r` from a numeric model with the exact pointwise form of
/// the reduction formulas.
pub fn reduce_numeric(nm: &NumericModel, r: StateIndex) -> Result<NumericModel, OracleError> {
    let x = nm.index(r)?;
    let bar = Rational::one() - &nm.p[x][x];
    if bar.is_zero() {
        return Err(OracleError::Singular);
    }
    let keep: Vec<usize> = (0..nm.n()).filter(|&k| k != x).collect();
    let mut p = vec![vec![Rational::zero(); keep.len()]; keep.len()];
    let mut e = p.clone();
    for (a, &i) in keep.iter().enumerate() {
        let q_ir = &nm.p[i][x] / &bar;
        for (b, &j) in keep.iter().enumerate() {
            let q_rj = &nm.p[x][j] / &bar;
            p[a][b] = &nm.p[i][j] + &nm.p[i][x] * &q_rj;
            e[a][b] = &nm.e[i][j]
                + &nm.e[i][x] * &q_rj
                + &nm.e[x][x] * &q_ir * &q_rj
                + &nm.e[x][j] * &q_ir;
        }
    }
    Ok(NumericModel {
        eps: nm.eps.clone(),
        states: keep.iter().map(|&k| nm.states[k]).collect(),
        p,
        e,
        approximate: nm.approximate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    #[serde(with = "serde_str")]
    pub eps: Rational,
    #[serde(with = "serde_str")]
    pub truth: Rational,
    #[serde(with = "serde_str")]
    pub value: Rational,
    /// `|truth − value|`.
    pub residual: f64,
    /// `|truth − value| / ε^{k+δ}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub samples: Vec<Residual>,
    #[serde(rename = "maxRatio")]
    pub max_ratio: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub passed: bool,
}

/// Relative slack on `G` absorbing float rounding in the bound arithmetic.
pub const BOUND_SLACK: f64 = 1e-9;

/// Checks `|truth(ε) − A(ε)| ≤ G ε^{k+δ}` at every sample `(ε, truth)`.
pub fn certify(
    expansion: &LaurentExpansion,
    samples: &[(Rational, Rational)],
) -> Result<CertificationReport, OracleError> {
    let bound = expansion.bound().ok_or(OracleError::MissingBound)?;
    let power = to_f64(&(Rational::from_integer(expansion.k().into()) + bound.delta()));
    let mut out = Vec::with_capacity(samples.len());
    for (eps, truth) in samples {
        if !eps.is_positive() {
            return Err(OracleError::NonPositiveEpsilon(format_rational(eps)));
        }
        if eps > &from_f64(bound.eps_bar()).unwrap() {
            return Err(OracleError::SampleBeyondEpsBar {
                eps: format_rational(eps),
                eps_bar: bound.eps_bar(),
            });
        }
        let value = expansion.evaluate_unchecked(eps);
        let residual = to_f64(&(truth - &value).abs());
        let ratio = residual / to_f64(eps).powf(power);
        out.push(Residual {
            eps: eps.clone(),
            truth: truth.clone(),
            value,
            residual,
            ratio,
        });
    }
    let max_ratio = out.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(CertificationReport {
        passed: max_ratio <= bound.g() * (1.0 + BOUND_SLACK),
        samples: out,
        max_ratio,
        g: bound.g(),
    })
}
