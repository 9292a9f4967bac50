//! Command-line runner.
//!
//! Every subcommand reads one config file (`--config`) holding a `[chain]`
//! and/or `[weight]` section plus optional `[run]` parameters, which the
//! global flags override. The main output goes to stdout; with `--out DIR`
//! every output file is also written there. Exit status is 0 on success,
//! 2 when a report is inconsistent, 3 on input errors and 1 when a
//! computation fails. Warnings and errors go to stderr as one JSON object
//! per line.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rug::Float;

use crate::chain::{asymptotic_aperiodicity_sum, holding_double_sum, killing_sum, rj_over_pj_sum, series_l, ChainSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::harness::{
    blumenthal_edges, danka_totik_check, theorem_main_verdict, weight_pipeline, working_edge, BlumenthalOutcome,
    ConsistencyVerdict, EdgeExponents, HarnessConfig,
};
use crate::measure::{cn_series, quadrature_from_chain, srlp_predicted_limit, transition_probability, DiscreteMeasure};
use crate::montecarlo::{monte_carlo_absorption, monte_carlo_transition};
use crate::normalization::normalize;
use crate::polynomials::{absorption_probabilities, christoffel_series, eval_q, ratio_sequences, support_edges};
use crate::real::{Backend, Precision, Real};
use crate::recover::{chain_from_recurrence, stieltjes_recurrence};
use crate::specfile::{chain_to_toml, load_config, ExperimentConfig};
use crate::weight::discretize_weight;

#[derive(Debug, Parser)]
#[command(name = "rwlab", version, about = "Birth-death chains, random walk polynomials and their spectral measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with [chain], [weight] and [run] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in decimal digits.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Truncation size N of the Jacobi matrix.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Largest index n of computed sequences.
    #[arg(long, global = true)]
    horizon: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Periodicity, killing, the classification sums and the support edges.
    ChainInfo,
    /// Q_0(x)..Q_n(x) as CSV.
    Polys {
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
    },
    /// Support edges from eigenvalues and from positivity of Q_n.
    Edges,
    /// Discrete spectral measure as CSV.
    Measure,
    /// C_0..C_n as CSV.
    Cn,
    /// Christoffel functions at +-eta and their ratio.
    Christoffel,
    /// Normalized chain as a chain file.
    Normalize,
    /// Chain from the recurrence coefficients of a weight.
    Recover,
    /// Predicted against computed ratio limits of transition probabilities.
    Srlp,
    /// Conjecture report for a chain or a weight.
    Conjecture,
    /// Scaled Christoffel functions at the edges.
    DtCheck,
    /// Absorption probabilities tau_j.
    Absorb,
    /// Monte Carlo check of a transition probability and of absorption.
    Mc,
}

/// Result of one subcommand: named files, the first of which is printed.
struct Output {
    files: Vec<(String, String)>,
    status: i32,
    warnings: Vec<String>,
}

impl Output {
    fn one(name: &str, body: String) -> Output {
        Output {
            files: vec![(name.into(), body)],
            status: 0,
            warnings: Vec::new(),
        }
    }
}

fn record(level: &str, kind: &str, message: &str) -> String {
    serde_json::json!({ "level": level, "kind": kind, "message": message }).to_string()
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MalformedChain { .. }
        | Error::ChainTooShort { .. }
        | Error::ChainHasKilling { .. }
        | Error::NotARandomWalkMeasure { .. }
        | Error::SpecInconsistent(_)
        | Error::NonpositiveQ { .. }
        | Error::Expr(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::InvalidInput(_) => 3,
        _ => 1,
    }
}

/// Parse arguments, run, print. Returns the exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", record("error", "usage", e.to_string().trim()));
            return 3;
        }
    };
    match run(&cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("{}", record("warning", "note", w));
            }
            if let Some((_, body)) = out.files.first() {
                print!("{body}");
            }
            if let Some(dir) = &cli.out {
                if let Err(e) = write_outputs(dir, &out.files) {
                    eprintln!("{}", record("error", e.kind(), &e.to_string()));
                    return 3;
                }
            }
            out.status
        }
        Err(e) => {
            eprintln!("{}", record("error", e.kind(), &e.to_string()));
            exit_code(&e)
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Each file goes to a temporary name first and is renamed into place.
fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (name, body) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, body).map_err(|e| io_err(&tmp, e))?;
        std::fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Output> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let mut exp = load_config(path)?;
    let run = &mut exp.run;
    if let Some(p) = cli.precision {
        run.precision = p;
    }
    if let Some(s) = cli.seed {
        run.seed = s;
    }
    if let Some(n) = cli.truncation {
        run.truncation = n;
    }
    if let Some(n) = cli.horizon {
        run.horizon = n;
    }
    if let Command::Polys { x: Some(x) } = &cli.command {
        run.x = Some(x.clone());
    }
    run.validate()?;
    let prec = Precision::digits(run.precision);
    match Backend::for_precision(prec) {
        Backend::Double => dispatch::<f64>(&cli.command, &exp, prec),
        Backend::Multi => dispatch::<Float>(&cli.command, &exp, prec),
    }
}

fn dispatch<R: Real>(cmd: &Command, exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    match cmd {
        Command::ChainInfo => chain_info::<R>(exp, prec),
        Command::Polys { .. } => polys::<R>(exp, prec),
        Command::Edges => edges::<R>(exp, prec),
        Command::Measure => measure::<R>(exp, prec),
        Command::Cn => cn::<R>(exp, prec),
        Command::Christoffel => christoffel::<R>(exp, prec),
        Command::Normalize => normalized::<R>(exp, prec),
        Command::Recover => recover::<R>(exp, prec),
        Command::Srlp => srlp::<R>(exp, prec),
        Command::Conjecture => conjecture::<R>(exp, prec),
        Command::DtCheck => dt_check::<R>(exp, prec),
        Command::Absorb => absorb::<R>(exp, prec),
        Command::Mc => mc::<R>(exp, prec),
    }
}

fn need_chain(exp: &ExperimentConfig) -> Result<&ChainSpec> {
    exp.chain
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("the config has no [chain] section".into()))
}

/// The config's chain, or the chain recovered from its weight with `n` states.
fn chain_or_recovered<R: Real>(exp: &ExperimentConfig, n: usize, prec: Precision) -> Result<ChainSpec> {
    match (&exp.chain, &exp.weight) {
        (Some(c), _) => Ok(c.clone()),
        (None, Some(w)) => Ok(weight_pipeline::<R>(w, n, exp.run.grid, prec)?.0),
        (None, None) => Err(Error::InvalidInput("the config has neither [chain] nor [weight]".into())),
    }
}

fn real_from_text<R: Real>(text: &str, prec: Precision) -> Result<R> {
    let e = Expr::parse(text, 'x')?;
    match e.as_rational() {
        Some(r) => Ok(R::from_rational(r, prec)),
        None => Err(Error::InvalidInput(format!("'{text}' is not a constant"))),
    }
}

fn kv(lines: &mut String, key: &str, value: impl std::fmt::Display) {
    lines.push_str(&format!("{key}={value}\n"));
}

fn chain_info<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let run = &exp.run;
    let n = chain.available(run.horizon + 1).saturating_sub(1);
    let mut s = String::new();
    kv(&mut s, "label", &chain.label);
    kv(&mut s, "states", chain.len().map_or("infinite".to_string(), |l| l.to_string()));
    kv(&mut s, "periodic", chain.is_periodic()?);
    kv(&mut s, "killing", chain.has_killing()?);
    let mut warnings = Vec::new();
    let mut verdict = |name: &str, r: Result<crate::divergence::DivergenceVerdict>| match r {
        Ok(v) => {
            kv(&mut s, name, v.verdict);
            kv(&mut s, &format!("{name}_partial"), v.partial_sums.last().copied().unwrap_or(0.0));
            if let Some(t) = v.tail_analysis {
                kv(&mut s, &format!("{name}_tail"), t);
            }
        }
        Err(e) => {
            kv(&mut s, name, format!("error: {e}"));
            warnings.push(format!("{name}: {e}"));
        }
    };
    verdict("series_l", series_l::<R>(chain, n, prec));
    verdict("aperiodicity_sum", asymptotic_aperiodicity_sum::<R>(chain, n, prec));
    verdict("holding_double_sum", holding_double_sum::<R>(chain, n, prec));
    verdict("killing_sum", killing_sum::<R>(chain, n, prec));
    verdict("r_over_p_sum", rj_over_pj_sum::<R>(chain, n, prec));
    let trunc = chain.available(run.truncation).max(2);
    match support_edges::<R>(chain, trunc, 1e-4, prec) {
        Ok(e) => {
            kv(&mut s, "eta_hat", e.eta_hat_text);
            kv(&mut s, "zeta_hat", e.zeta_hat_text);
        }
        Err(e) => {
            kv(&mut s, "edges", format!("error: {e}"));
            warnings.push(format!("edges: {e}"));
        }
    }
    match blumenthal_edges(chain, n, prec)? {
        BlumenthalOutcome::Predicted(b) => kv(&mut s, "tail_edges", format!("{} {}", b.eta, b.zeta)),
        BlumenthalOutcome::NotApplicable { reason } => kv(&mut s, "tail_edges", format!("not applicable: {reason}")),
    }
    let mut out = Output::one("chain_info.txt", s);
    out.warnings = warnings;
    Ok(out)
}

fn polys<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let x_text = exp.run.x.as_deref().unwrap_or("1");
    let x: R = real_from_text(x_text, prec)?;
    let n = chain.available(exp.run.horizon + 1).saturating_sub(1);
    let trace = eval_q(chain, n, &x, prec)?;
    let mut out = Output::one("polys.csv", trace.to_csv());
    if trace.error_estimate > 1e-6 {
        out.warnings
            .push(format!("estimated relative error {:e} at n = {n}", trace.error_estimate));
    }
    Ok(out)
}

fn edges<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let trunc = chain.available(exp.run.truncation).max(2);
    let e = support_edges::<R>(chain, trunc, 1e-4, prec)?;
    let mut s = String::new();
    kv(&mut s, "label", &chain.label);
    kv(&mut s, "truncation", e.truncation_size);
    kv(&mut s, "method", format!("{:?}", e.method));
    kv(&mut s, "eta_hat", &e.eta_hat_text);
    kv(&mut s, "zeta_hat", &e.zeta_hat_text);
    kv(&mut s, "eta_eigen", e.eta_eigen);
    kv(&mut s, "eta_bisection", e.eta_bisection);
    kv(&mut s, "zeta_eigen", e.zeta_eigen);
    kv(&mut s, "zeta_bisection", e.zeta_bisection);
    kv(&mut s, "discrepancy", format!("{:e}", e.discrepancy));
    Ok(Output::one("edges.txt", s))
}

fn discrete_measure<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<DiscreteMeasure<R>> {
    match (&exp.chain, &exp.weight) {
        (Some(c), _) => quadrature_from_chain(c, c.available(exp.run.truncation).max(1), prec),
        (None, Some(w)) => discretize_weight(w, exp.run.grid.max(6 * exp.run.horizon), prec),
        (None, None) => Err(Error::InvalidInput("the config has neither [chain] nor [weight]".into())),
    }
}

fn measure<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    Ok(Output::one("measure.csv", discrete_measure::<R>(exp, prec)?.to_csv()))
}

fn cn<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let m = discrete_measure::<R>(exp, prec)?;
    let exact = match exp.chain {
        Some(_) => 2 * m.len() - 1,
        None => m.resolved_degree,
    };
    let n = exp.run.horizon.min(exact);
    let mut out = Output::one("cn.csv", {
        let mut s = String::from("n,C_n,log_C_n\n");
        for c in cn_series(&m, n)? {
            s.push_str(&format!("{},{},{}\n", c.n, c.value, c.log_value));
        }
        s
    });
    if n < exp.run.horizon {
        out.warnings.push(format!("C_n is only exact up to n = {exact}; stopped there"));
    }
    Ok(out)
}

fn christoffel<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let run = &exp.run;
    let chain = chain_or_recovered::<R>(exp, run.horizon + 2, prec)?;
    let n = chain.available(run.horizon + 1).saturating_sub(1);
    let edge = working_edge::<R>(&chain, exp.weight.as_ref(), run.truncation, n + 1, prec)?;
    let t = chain.table::<R>(n + 1, prec)?;
    let plus = christoffel_series(&t, n, &edge.eta)?;
    let minus = christoffel_series(&t, n, &(-edge.eta.clone()))?;
    let ratios = ratio_sequences(&t, n, &edge.eta)?;
    let mut s = String::from("n,rho_eta,rho_minus_eta,rho_ratio,q_ratio\n");
    for k in 1..=n {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            k,
            plus[k - 1].to_f64(),
            minus[k - 1].to_f64(),
            ratios.rho_ratio[k - 1],
            ratios.q_ratio[k - 1]
        ));
    }
    let mut out = Output::one("christoffel.csv", s);
    out.warnings.push(format!("eta = {} ({})", edge.eta.to_sci_string(), edge.source));
    Ok(out)
}

fn normalized<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let run = &exp.run;
    let eta: R = match &run.x {
        Some(text) => real_from_text(text, prec)?,
        None => working_edge::<R>(chain, exp.weight.as_ref(), run.truncation, run.depth.max(run.horizon) + 1, prec)?.eta,
    };
    let nc = normalize(chain, &eta, run.depth, prec)?;
    let mut out = Output::one("normalized.toml", nc.to_chain_file());
    out.warnings
        .push(format!("largest |p~ + q~ + r~ - 1| = {:e}", nc.sum_deviation));
    Ok(out)
}

fn recover<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let w = exp
        .weight
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("the config has no [weight] section".into()))?;
    let n = exp.run.depth;
    let m = discretize_weight::<R>(w, exp.run.grid.max(12 * n), prec)?;
    let coeffs = stieltjes_recurrence(&m, n)?;
    let rec = chain_from_recurrence(&coeffs, &w.label)?;
    let clamped = rec.clamped.clone();
    let chain = rec.into_result()?;
    let comment = format!("recovered from weight '{}' ({} states)", w.label, n);
    let mut out = Output {
        files: vec![
            ("recovered.toml".into(), chain_to_toml(&chain, Some(&comment))),
            ("recurrence.csv".into(), coeffs.to_csv()),
        ],
        status: 0,
        warnings: Vec::new(),
    };
    if !clamped.is_empty() {
        out.warnings
            .push(format!("holding probabilities at {clamped:?} were within roundoff of 0 and set to 0"));
    }
    Ok(out)
}

fn srlp<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let run = &exp.run;
    let [i, j, k, l] = run.indices;
    let edge = working_edge::<R>(chain, exp.weight.as_ref(), run.truncation, run.horizon + 1, prec)?;
    let cmp = srlp_predicted_limit(chain, i, j, k, l, &edge.eta, run.horizon, prec)?;
    let mut s = format!("# predicted={}\nn,ratio\n", cmp.predicted);
    for (n, v) in &cmp.empirical {
        s.push_str(&format!("{n},{}\n", v.map_or(String::new(), |x| x.to_string())));
    }
    Ok(Output::one("srlp.csv", s))
}

fn harness_config(exp: &ExperimentConfig, prec: Precision) -> HarnessConfig {
    HarnessConfig {
        prec,
        truncation: exp.run.truncation,
        horizon: exp.run.horizon,
        grid: exp.run.grid,
        ..HarnessConfig::default()
    }
}

fn conjecture<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let cfg = harness_config(exp, prec);
    let n = cfg.truncation.max(cfg.horizon + 2);
    let chain = chain_or_recovered::<R>(exp, n, prec)?;
    let report = theorem_main_verdict::<R>(&chain, exp.weight.as_ref(), &cfg)?;
    let inconsistent = report.verdict == ConsistencyVerdict::Inconsistent
        || report.prediction_check == Some(ConsistencyVerdict::Inconsistent);
    Ok(Output {
        files: vec![
            ("report.txt".into(), report.to_text()),
            ("report.csv".into(), report.to_csv()),
        ],
        status: if inconsistent { 2 } else { 0 },
        warnings: Vec::new(),
    })
}

fn dt_check<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let w = exp
        .weight
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("dt-check needs a [weight] section for the edge exponents".into()))?;
    let run = &exp.run;
    let chain = chain_or_recovered::<R>(exp, run.horizon + 2, prec)?;
    let e = EdgeExponents::from_weight(w, run.grid)?;
    let eta = R::from_rational(&w.eta, prec);
    let dt = danka_totik_check(&chain, &e, &eta, run.horizon, prec)?;
    let mut s = String::new();
    kv(&mut s, "label", &chain.label);
    kv(&mut s, "limit_plus", dt.limit_plus.describe());
    kv(&mut s, "limit_minus", dt.limit_minus.describe());
    kv(&mut s, "paper_constant_plus", dt.paper_constant_plus);
    kv(&mut s, "paper_constant_minus", dt.paper_constant_minus);
    kv(&mut s, "calibration_factor", dt.calibration_factor);
    kv(&mut s, "calibrated_constant_plus", dt.paper_constant_plus * dt.calibration_factor);
    kv(&mut s, "calibrated_constant_minus", dt.paper_constant_minus * dt.calibration_factor);
    let mut csv = String::from("n,scaled_plus,scaled_minus\n");
    for (k, (a, b)) in dt.scaled_plus.iter().zip(&dt.scaled_minus).enumerate() {
        csv.push_str(&format!("{},{a},{b}\n", k + 1));
    }
    Ok(Output {
        files: vec![("dt_check.txt".into(), s), ("dt_check.csv".into(), csv)],
        status: 0,
        warnings: Vec::new(),
    })
}

fn absorb<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let run = &exp.run;
    let a = absorption_probabilities::<R>(chain, run.depth, run.horizon, prec)?;
    let mut s = format!(
        "# route={:?} q_infinity={}\nj,tau\n",
        a.route,
        a.q_infinity.map_or("divergent".to_string(), |v| v.to_string())
    );
    for (j, t) in a.tau.iter().enumerate() {
        s.push_str(&format!("{j},{t}\n"));
    }
    Ok(Output::one("absorb.csv", s))
}

fn mc<R: Real>(exp: &ExperimentConfig, prec: Precision) -> Result<Output> {
    let chain = need_chain(exp)?;
    let run = &exp.run;
    let [i, j, ..] = run.indices;
    let quad = chain.available(run.truncation.max((run.steps + 2 * i.max(j) + 3) / 2 + 1));
    let q = transition_probability::<R>(chain, i, j, run.steps, quad, prec)?;
    let est = monte_carlo_transition(chain, i, j, run.steps, run.samples, run.seed)?;
    let mut s = String::new();
    kv(&mut s, "label", &chain.label);
    kv(&mut s, "transition", format!("{i} -> {j} in {} steps", run.steps));
    kv(&mut s, "spectral", q.value_spectral);
    kv(&mut s, "matrix", q.value_matrix);
    kv(&mut s, "mc_estimate", est.estimate);
    kv(&mut s, "mc_std_error", est.std_error);
    kv(&mut s, "mc_samples", est.samples);
    let z = (est.estimate - q.value_matrix).abs() / est.std_error.max(f64::MIN_POSITIVE);
    kv(&mut s, "mc_z_score", z);
    if chain.has_killing()? {
        let a = absorption_probabilities::<R>(chain, i, run.horizon, prec)?;
        let m = monte_carlo_absorption(chain, i, run.horizon, run.samples, run.seed)?;
        kv(&mut s, "tau", a.tau[i]);
        kv(&mut s, "mc_absorbed", m.absorbed.estimate);
        kv(&mut s, "mc_absorbed_std_error", m.absorbed.std_error);
        kv(&mut s, "mc_unresolved_fraction", m.unresolved_fraction);
        kv(&mut s, "mc_horizon", m.horizon);
    }
    Ok(Output::one("mc.txt", s))
}
