//! `smpa`: asymptotic analysis of perturbed semi-Markov models from the
//! command line.

mod render;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use smp_asymptotics::model::{
    complete_remainders, designated_entry, polynomialized, positivity_thresholds,
    validate_conditions, Alpha, SemiMarkovModel, StateIndex,
};
use smp_asymptotics::oracle::{
    certify, instantiate, numeric_hitting, numeric_stationary, CertificationReport,
};
use smp_asymptotics::rational::{from_f64, parse_rational, powi, Rational};
use smp_asymptotics::reduction::{hitting_time, pairwise_hitting, reduce_sequence};
use smp_asymptotics::stationary::{stationary, stationary_all};
use smp_asymptotics::LaurentExpansion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "smpa", version, about = "Asymptotic expansions for perturbed semi-Markov processes")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check connectivity, row coefficient sums, leading orders and δ floors.
    Validate { file: PathBuf },
    /// Fill in the remainder bound of each row's designated entry.
    Complete {
        file: PathBuf,
        /// Where to write the completed model (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Radius below which all probabilities and expectations stay positive.
    Thresholds {
        file: PathBuf,
        /// α in (0, 1/2), applied to every pair.
        #[arg(long)]
        alpha: String,
    },
    /// Exclude states one after another.
    Reduce {
        file: PathBuf,
        /// Comma-separated states to exclude, in order.
        #[arg(long)]
        exclude: String,
        /// Print every intermediate model.
        #[arg(long)]
        trace: bool,
    },
    /// Expected return time to a state.
    Hitting {
        file: PathBuf,
        #[arg(long)]
        target: u32,
        /// Comma-separated exclusion order (all other states).
        #[arg(long)]
        order: Option<String>,
    },
    /// Hitting times between two states.
    Pairwise {
        file: PathBuf,
        /// Two states, comma-separated.
        #[arg(long)]
        pair: String,
    },
    /// Stationary distribution expansions.
    Stationary {
        file: PathBuf,
        /// Compute a single state only.
        #[arg(long)]
        state: Option<u32>,
        /// Exclusion order for `--state`.
        #[arg(long)]
        order: Option<String>,
        /// Report bounds rewritten at the model's δ*.
        #[arg(long)]
        rebase_delta_star: bool,
    },
    /// Evaluate the model and the exact oracle at one ε.
    Eval {
        file: PathBuf,
        #[arg(long)]
        epsilon: String,
    },
    /// Check the stationary and hitting-time bounds against the exact oracle.
    Certify {
        file: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        eps_max: String,
    },
}

/// Failure classes, mapped to exit codes 2 and 1.
enum Failure {
    Usage(anyhow::Error),
    Rejected(anyhow::Error),
}

type Outcome = Result<bool, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn rejected(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Rejected(e.into())
}

fn load(path: &Path) -> Result<SemiMarkovModel, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)?;
    SemiMarkovModel::from_json(&text)
        .with_context(|| format!("invalid model {}", path.display()))
        .map_err(rejected)
}

fn rational_flag(name: &str, value: &str) -> Result<Rational, Failure> {
    parse_rational(value)
        .with_context(|| format!("--{name}"))
        .map_err(usage)
}

fn positive_flag(name: &str, value: &str) -> Result<Rational, Failure> {
    let r = rational_flag(name, value)?;
    if r <= Rational::from_integer(0.into()) {
        return Err(usage(anyhow!("--{name} must be positive, got {value}")));
    }
    Ok(r)
}

fn state(label: u32) -> Result<StateIndex, Failure> {
    StateIndex::new(label).ok_or_else(|| usage(anyhow!("state labels start at 1")))
}

fn state_list(name: &str, value: &str) -> Result<Vec<StateIndex>, Failure> {
    value
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .ok()
                .and_then(StateIndex::new)
                .ok_or_else(|| usage(anyhow!("--{name}: `{t}` is not a state label")))
        })
        .collect()
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn write_out(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn emit(format: Format, value: serde_json::Value, text: String) {
    match format {
        Format::Json => write_out(&(serde_json::to_string_pretty(&value).expect("json") + "\n")),
        Format::Text => write_out(&text),
    }
}

fn run(cli: Cli) -> Outcome {
    let format = cli.format;
    match cli.command {
        Command::Validate { file } => {
            let m = load(&file)?;
            let report = validate_conditions(&m);
            emit(format, json!(report), render::validation(&report));
            Ok(report.passed())
        }
        Command::Complete { file, output } => {
            let m = load(&file)?;
            let completed = complete_remainders(&m).map_err(rejected)?;
            let doc = completed.to_json();
            match output {
                None => write_out(&(doc + "\n")),
                Some(path) => {
                    std::fs::write(&path, doc + "\n")
                        .with_context(|| format!("cannot write {}", path.display()))
                        .map_err(usage)?;
                    let designated: Vec<_> = completed
                        .states()
                        .iter()
                        .map(|&i| {
                            let j = designated_entry(&completed, i);
                            json!({"from": i, "to": j, "p": completed.p(i, j)})
                        })
                        .collect();
                    emit(
                        format,
                        json!({"output": path, "designated": designated}),
                        render::completion(&completed, &path),
                    );
                }
            }
            Ok(true)
        }
        Command::Thresholds { file, alpha } => {
            let m = load(&file)?;
            let alpha = rational_flag("alpha", &alpha)?;
            let t = positivity_thresholds(&m, &Alpha::Uniform(alpha)).map_err(|e| match e {
                smp_asymptotics::model::ModelError::InvalidAlpha { .. } => usage(e),
                other => rejected(other),
            })?;
            emit(format, json!(t), render::thresholds(&t));
            Ok(true)
        }
        Command::Reduce {
            file,
            exclude,
            trace,
        } => {
            let m = load(&file)?;
            let order = state_list("exclude", &exclude)?;
            let steps = reduce_sequence(&m, &order).map_err(rejected)?;
            let last = steps.last().expect("at least one state excluded");
            let value = if trace {
                json!({ "steps": steps })
            } else {
                json!({ "excluded": order, "barP": last.bar_p, "model": last.model })
            };
            emit(format, value, render::reduction(&steps, trace));
            Ok(true)
        }
        Command::Hitting {
            file,
            target,
            order,
        } => {
            let m = load(&file)?;
            let order = order.map(|o| state_list("order", &o)).transpose()?;
            let r = hitting_time(&m, state(target)?, order.as_deref()).map_err(rejected)?;
            emit(format, json!(r), render::hitting(&r));
            Ok(true)
        }
        Command::Pairwise { file, pair } => {
            let m = load(&file)?;
            let pair = state_list("pair", &pair)?;
            let [i, j] = pair[..] else {
                return Err(usage(anyhow!("--pair needs exactly two states")));
            };
            let out = pairwise_hitting(&m, i, j).map_err(rejected)?;
            let value: Vec<_> = out
                .iter()
                .map(|((a, b), x)| json!({"from": a, "to": b, "expansion": x}))
                .collect();
            emit(format, json!(value), render::pairwise(&out));
            Ok(true)
        }
        Command::Stationary {
            file,
            state: only,
            order,
            rebase_delta_star,
        } => {
            let m = load(&file)?;
            let order = order.map(|o| state_list("order", &o)).transpose()?;
            match only {
                Some(i) => {
                    let r = stationary(&m, state(i)?, order.as_deref()).map_err(rejected)?;
                    let shown = shown_expansion(&r.expansion, &r.rebased, rebase_delta_star);
                    emit(
                        format,
                        json!({"state": r.state, "expansion": shown, "exclusionOrder": r.exclusion_order}),
                        render::stationary_one(r.state, shown),
                    );
                    Ok(true)
                }
                None => {
                    if order.is_some() {
                        return Err(usage(anyhow!("--order requires --state")));
                    }
                    let r = stationary_all(&m, None).map_err(rejected)?;
                    let shown: BTreeMap<StateIndex, &LaurentExpansion> = r
                        .per_state
                        .iter()
                        .map(|(&i, s)| (i, shown_expansion(&s.expansion, &s.rebased, rebase_delta_star)))
                        .collect();
                    let value = json!({
                        "perState": shown,
                        "exclusionOrders": r.per_state.iter().map(|(i, s)| (i.to_string(), &s.exclusion_order)).collect::<BTreeMap<_, _>>(),
                        "deltaStar": smp_asymptotics::rational::format_rational(&r.delta_star),
                        "consistency": r.consistency,
                    });
                    emit(format, value, render::stationary_all(&shown, &r));
                    Ok(r.consistency.passed())
                }
            }
        }
        Command::Eval { file, epsilon } => {
            let m = load(&file)?;
            let eps = positive_flag("epsilon", &epsilon)?;
            let nm = instantiate(&m, &eps).map_err(usage)?;
            let truth = polynomialized(&m).map_err(rejected)?;
            let tm = instantiate(&truth, &eps).map_err(rejected)?;
            let pi = numeric_stationary(&tm).map_err(rejected)?;
            let hits = tm
                .states
                .iter()
                .map(|&i| numeric_hitting(&tm, i).map(|v| (i, v)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(rejected)?;
            emit(
                format,
                render::eval_json(&nm, &pi, &hits),
                render::eval_text(&nm, &pi, &hits),
            );
            Ok(true)
        }
        Command::Certify {
            file,
            samples,
            eps_max,
        } => {
            let m = load(&file)?;
            if samples == 0 {
                return Err(usage(anyhow!("--samples must be at least 1")));
            }
            let eps_max = positive_flag("eps-max", &eps_max)?;
            let reports = certify_model(&m, samples, &eps_max)?;
            let passed = reports.iter().all(|(_, r)| r.passed);
            let value: Vec<_> = reports
                .iter()
                .map(|(name, r)| json!({"quantity": name, "report": r}))
                .collect();
            emit(format, json!({"passed": passed, "checks": value}), render::certification(&reports));
            Ok(passed)
        }
    }
}

fn shown_expansion<'a>(
    raw: &'a LaurentExpansion,
    rebased: &'a Option<LaurentExpansion>,
    prefer_rebased: bool,
) -> &'a LaurentExpansion {
    match (prefer_rebased, rebased) {
        (true, Some(r)) => r,
        _ => raw,
    }
}

/// Dyadic samples `min(eps_max, ε̄) · 2^{−s}` within one expansion's domain.
fn samples_for(x: &LaurentExpansion, n: usize, eps_max: &Rational) -> Vec<Rational> {
    let eps_bar = x
        .bound()
        .and_then(|b| from_f64(b.eps_bar()))
        .unwrap_or_else(|| eps_max.clone());
    let top = eps_max.clone().min(eps_bar);
    let half = Rational::new(1.into(), 2.into());
    (0..n).map(|s| &top * powi(&half, s as i64)).collect()
}

fn certify_model(
    m: &SemiMarkovModel,
    n: usize,
    eps_max: &Rational,
) -> Result<Vec<(String, CertificationReport)>, Failure> {
    let truth = polynomialized(m).map_err(rejected)?;
    let result = stationary_all(m, None).map_err(rejected)?;
    let mut out = Vec::new();
    for (&i, st) in &result.per_state {
        let idx = truth.states().iter().position(|&x| x == i).unwrap();
        for (name, x) in [(format!("pi_{i}"), &st.expansion), (format!("E_{i}{i}"), &st.hitting)] {
            let mut pts = Vec::new();
            for eps in samples_for(x, n, eps_max) {
                let nm = instantiate(&truth, &eps).map_err(rejected)?;
                let value = if name.starts_with("pi") {
                    numeric_stationary(&nm).map_err(rejected)?[idx].clone()
                } else {
                    numeric_hitting(&nm, i).map_err(rejected)?
                };
                pts.push((eps, value));
            }
            out.push((name, certify(x, &pts).map_err(rejected)?));
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Rejected(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
