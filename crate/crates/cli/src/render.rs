//! Text and JSON renderings of command results.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use num_traits::Zero;
use serde_json::{json, Value};

use smp_asymptotics::model::{
    designated_entry, PositivityThresholds, SemiMarkovModel, StateIndex, ValidationReport,
};
use smp_asymptotics::oracle::{CertificationReport, NumericModel};
use smp_asymptotics::rational::{format_rational, to_f64, Pretty, Rational};
use smp_asymptotics::reduction::{HittingResult, ReductionStep};
use smp_asymptotics::stationary::StationaryResult;
use smp_asymptotics::LaurentExpansion;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

pub fn validation(r: &ValidationReport) -> String {
    let mut s = String::new();
    let c = &r.connectivity;
    writeln!(s, "connectivity: {}", verdict(c.strongly_connected)).unwrap();
    for f in &c.failures {
        let reach: Vec<String> = f.reachable.iter().map(|x| x.to_string()).collect();
        writeln!(s, "  {} cannot reach {} (reachable: {})", f.from, f.to, reach.join(",")).unwrap();
    }
    for row in &r.rows {
        writeln!(s, "row {}: {}", row.state, verdict(row.passed())).unwrap();
        for (l, sum) in &row.sums {
            writeln!(s, "  order {l}: sum {}", Pretty(sum)).unwrap();
        }
    }
    writeln!(s, "pivotality: {}", verdict(r.pivotality.is_empty())).unwrap();
    for f in &r.pivotality {
        writeln!(s, "  {}({},{}) has a non-positive leading coefficient", f.which, f.from, f.to).unwrap();
    }
    writeln!(
        s,
        "delta floors: circ {} star {}",
        Pretty(&r.delta_floors.delta_circ),
        Pretty(&r.delta_floors.delta_star)
    )
    .unwrap();
    writeln!(s, "result: {}", verdict(r.passed())).unwrap();
    s
}

pub fn completion(m: &SemiMarkovModel, path: &Path) -> String {
    let mut s = format!("wrote {}\n", path.display());
    for &i in m.states() {
        let j = designated_entry(m, i);
        writeln!(s, "  p({i},{j}) = {}", m.p(i, j).unwrap()).unwrap();
    }
    s
}

pub fn thresholds(t: &PositivityThresholds) -> String {
    let mut s = String::new();
    for e in &t.entries {
        writeln!(
            s,
            "({},{}): p {:.6} / {:.6}, e {:.6} / {:.6}",
            e.from, e.to, e.eps_alpha_p, e.eps_prime_p, e.eps_alpha_e, e.eps_prime_e
        )
        .unwrap();
    }
    writeln!(s, "eps'0  = {:.6}", t.eps_prime0).unwrap();
    writeln!(s, "eps''0 = {:.6}", t.eps_double_prime0).unwrap();
    writeln!(s, "eps~0  = {:.6}", t.eps_tilde0).unwrap();
    s
}

fn model_entries(s: &mut String, m: &SemiMarkovModel) {
    for (&(i, j), e) in m.entries() {
        writeln!(s, "  p({i},{j}) = {}", e.p).unwrap();
        writeln!(s, "  e({i},{j}) = {}", e.e).unwrap();
    }
}

pub fn reduction(steps: &[ReductionStep], trace: bool) -> String {
    let mut s = String::new();
    let shown = if trace { steps } else { &steps[steps.len() - 1..] };
    for step in shown {
        writeln!(s, "excluded {}: bar p = {}", step.excluded, step.bar_p).unwrap();
        model_entries(&mut s, &step.model);
    }
    s
}

pub fn hitting(r: &HittingResult) -> String {
    let order: Vec<String> = r.exclusion_order.iter().map(|x| x.to_string()).collect();
    let mut s = format!("E({0},{0}) = {1}\n", r.target, r.expansion);
    writeln!(s, "exclusion order: {}", order.join(",")).unwrap();
    if let Some(x) = &r.delta_star_rebased {
        writeln!(s, "at delta* = {}: {}", Pretty(&r.delta_star), x).unwrap();
    }
    s
}

pub fn pairwise(out: &BTreeMap<(StateIndex, StateIndex), LaurentExpansion>) -> String {
    out.iter()
        .map(|((a, b), x)| format!("E({a},{b}) = {x}\n"))
        .collect()
}

pub fn stationary_one(i: StateIndex, x: &LaurentExpansion) -> String {
    format!("pi({i}) = {x}\n")
}

pub fn stationary_all(shown: &BTreeMap<StateIndex, &LaurentExpansion>, r: &StationaryResult) -> String {
    let mut s = String::new();
    for (i, x) in shown {
        writeln!(s, "pi({i}) = {x}").unwrap();
    }
    let c = &r.consistency;
    writeln!(s, "sum at order 0: {}", Pretty(&c.zero_order_sum)).unwrap();
    for (l, v) in &c.higher_order_sums {
        writeln!(s, "sum at order {l}: {}", Pretty(v)).unwrap();
    }
    writeln!(s, "complement check on state {}: {}", c.complement_state, verdict(c.complement_mismatches.is_empty())).unwrap();
    writeln!(s, "consistency: {}", verdict(c.passed())).unwrap();
    s
}

fn matrix_json(nm: &NumericModel, m: &[Vec<Rational>]) -> Value {
    let mut out = serde_json::Map::new();
    for (a, &i) in nm.states.iter().enumerate() {
        for (b, &j) in nm.states.iter().enumerate() {
            if !m[a][b].is_zero() {
                out.insert(format!("{i},{j}"), json!(format_rational(&m[a][b])));
            }
        }
    }
    Value::Object(out)
}

pub fn eval_json(nm: &NumericModel, pi: &[Rational], hits: &[(StateIndex, Rational)]) -> Value {
    let stationary: BTreeMap<String, String> = nm
        .states
        .iter()
        .zip(pi)
        .map(|(i, v)| (i.to_string(), format_rational(v)))
        .collect();
    let hitting: BTreeMap<String, String> = hits
        .iter()
        .map(|(i, v)| (i.to_string(), format_rational(v)))
        .collect();
    json!({
        "epsilon": format_rational(&nm.eps),
        "approximate": nm.approximate,
        "p": matrix_json(nm, &nm.p),
        "e": matrix_json(nm, &nm.e),
        "stationary": stationary,
        "hitting": hitting,
    })
}

pub fn eval_text(nm: &NumericModel, pi: &[Rational], hits: &[(StateIndex, Rational)]) -> String {
    let mut s = format!("epsilon = {}\n", Pretty(&nm.eps));
    if nm.approximate {
        s.push_str("entries evaluated without their remainders\n");
    }
    for (a, &i) in nm.states.iter().enumerate() {
        for (b, &j) in nm.states.iter().enumerate() {
            if !nm.p[a][b].is_zero() || !nm.e[a][b].is_zero() {
                writeln!(s, "  p({i},{j}) = {}  e({i},{j}) = {}", Pretty(&nm.p[a][b]), Pretty(&nm.e[a][b])).unwrap();
            }
        }
    }
    for (&i, v) in nm.states.iter().zip(pi) {
        writeln!(s, "pi({i}) = {} ≈ {:.9}", Pretty(v), to_f64(v)).unwrap();
    }
    for (i, v) in hits {
        writeln!(s, "E({i},{i}) = {} ≈ {:.9}", Pretty(v), to_f64(v)).unwrap();
    }
    s
}

pub fn certification(reports: &[(String, CertificationReport)]) -> String {
    let mut s = String::new();
    for (name, r) in reports {
        writeln!(
            s,
            "{name}: max ratio {:.6e} vs G {:.6e} over {} samples: {}",
            r.max_ratio,
            r.g,
            r.samples.len(),
            verdict(r.passed)
        )
        .unwrap();
    }
    writeln!(s, "result: {}", verdict(reports.iter().all(|(_, r)| r.passed))).unwrap();
    s
}
