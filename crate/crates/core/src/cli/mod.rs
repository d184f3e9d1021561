//! Command-line front end.
//!
//! Series are exchanged as `t,x` CSV files; structured results are written
//! as JSON objects carrying `"schema_version": 1`. A JSON config file may
//! supply any flag under the flag's long name (with `_` for `-`); flags
//! given on the command line win.

mod io;

pub use io::{emit_json, load_series, read_series, write_series, write_series_to, SCHEMA_VERSION};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::estimate::{estimate, standardized_residuals};
use crate::interval::{
    ci_naive_plugin_with, ci_sample_split_with, ci_two_process_with, make_split_plan, Scheme,
    DEFAULT_A_EXP, DEFAULT_B_EXP,
};
use crate::model::{simulate, InnovationSpec, ModelKind, ParamVector, DEFAULT_BURN_IN};
use crate::optim::OptimizerConfig;
use crate::predict::{conditional_es, conditional_var, evaluate_prediction, RiskLevel, TruncationSpec};
use crate::verify::{gradient_check, run_coverage, run_coverage_with_jobs, truncation_decay, ExperimentConfig};

pub const SEED_ENV: &str = "PREDFRAME_SEED";

#[derive(Debug, Parser)]
#[command(name = "predframe", version, about = "Conditional prediction intervals for AR, ARMA, GARCH and T-GARCH models")]
pub struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Simulate,
    Estimate,
    Predict,
    Ci,
    Coverage,
    Check,
    Risk,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series and write it as CSV.
    Simulate(Opts),
    /// Estimate parameters from a series.
    Estimate(Opts),
    /// Evaluate the prediction function and its derivatives.
    Predict(Opts),
    /// Confidence interval for the next-period prediction function.
    Ci(Opts),
    /// Monte Carlo coverage experiment.
    Coverage(Opts),
    /// Finite-difference and truncation-decay diagnostics.
    Check(Opts),
    /// Conditional VaR and expected shortfall (T-GARCH).
    Risk(Opts),
}

impl Command {
    fn split(self) -> (CommandKind, Opts) {
        match self {
            Command::Simulate(o) => (CommandKind::Simulate, o),
            Command::Estimate(o) => (CommandKind::Estimate, o),
            Command::Predict(o) => (CommandKind::Predict, o),
            Command::Ci(o) => (CommandKind::Ci, o),
            Command::Coverage(o) => (CommandKind::Coverage, o),
            Command::Check(o) => (CommandKind::Check, o),
            Command::Risk(o) => (CommandKind::Risk, o),
        }
    }
}

/// Flags shared by all commands. Each command reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Opts {
    /// ar1, arma11, garch11 or tgarch11.
    #[arg(long)]
    pub model: Option<String>,
    /// Full parameter vector, comma separated, in model order.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long = "alpha-plus")]
    pub alpha_plus: Option<f64>,
    #[arg(long = "alpha-minus")]
    pub alpha_minus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Sample length.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// normal, or t:NU for unit-variance Student-t.
    #[arg(long)]
    pub innov: Option<String>,
    #[arg(long = "sigma-eps")]
    pub sigma_eps: Option<f64>,
    /// Input series (CSV with columns t,x).
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Separate estimation series for the two-process scheme.
    #[arg(long = "est-in")]
    pub est_in: Option<PathBuf>,
    /// Column holding the observations.
    #[arg(long)]
    pub column: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra CSV table (coverage summaries or decay table).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// 2ip, spl or naive.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Schemes for coverage, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Split exponent for the prediction window.
    #[arg(long)]
    pub a: Option<f64>,
    /// Split exponent for the estimation sample.
    #[arg(long)]
    pub b: Option<f64>,
    /// First retained observation of the prediction window.
    #[arg(long)]
    pub t1: Option<usize>,
    #[arg(long = "t1-grid", value_delimiter = ',')]
    pub t1_grid: Option<Vec<usize>>,
    /// Finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads for coverage.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Tail probability for VaR/ES.
    #[arg(long = "risk-level")]
    pub risk_level: Option<f64>,
    /// Drop boundary fits from coverage summaries.
    #[arg(long = "exclude-clamped", num_args = 0..=1, default_missing_value = "true")]
    pub exclude_clamped: Option<bool>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub flags: Opts,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Overlays command-line flags on the config file values.
fn merge(file: Opts, flags: Opts) -> CliResult<Opts> {
    let to_map = |o: &Opts| match serde_json::to_value(o) {
        Ok(Value::Object(m)) => Ok(m),
        _ => Err(usage("could not merge options")),
    };
    let mut base: Map<String, Value> = to_map(&file)?;
    for (k, v) in to_map(&flags)? {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| usage(e.to_string()))
}

fn absolute(p: &Path) -> CliResult<PathBuf> {
    std::path::absolute(p).map_err(|e| usage(format!("{}: {e}", p.display())))
}

/// Merges the config file, resolves paths and the seed.
pub fn build_manifest(cli: Cli) -> CliResult<RunManifest> {
    let (command, flags) = cli.command.split();
    let file_opts = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => Opts::default(),
    };
    let mut flags = merge(file_opts, flags)?;
    let seed = match flags.seed {
        Some(s) => Some(s),
        None => match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| usage(format!("{SEED_ENV} is not an unsigned integer: '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    flags.seed = seed;
    for p in [&mut flags.input, &mut flags.est_in, &mut flags.out, &mut flags.table]
        .into_iter()
        .flatten()
    {
        *p = absolute(p)?;
    }
    let inputs = [&flags.input, &flags.est_in].into_iter().flatten().cloned().collect();
    Ok(RunManifest {
        command,
        inputs,
        output: flags.out.clone(),
        flags,
        seed,
    })
}

fn model(o: &Opts) -> CliResult<ModelKind> {
    let m = o.model.as_deref().ok_or_else(|| usage("--model is required"))?;
    m.parse().map_err(|e: Error| usage(e.to_string()))
}

fn theta(kind: ModelKind, o: &Opts) -> CliResult<Option<ParamVector>> {
    if let Some(v) = &o.theta {
        return Ok(Some(ParamVector::new(v.clone())));
    }
    let named = |name: &str| match name {
        "omega" => o.omega,
        "alpha" => o.alpha,
        "alpha_plus" => o.alpha_plus,
        "alpha_minus" => o.alpha_minus,
        "beta" => o.beta,
        _ => None,
    };
    let vals: Vec<Option<f64>> = kind.param_names().iter().map(|n| named(n)).collect();
    if vals.iter().all(Option::is_none) {
        return Ok(None);
    }
    let missing: Vec<&str> = kind
        .param_names()
        .iter()
        .zip(&vals)
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(usage(format!("{kind} also needs --{}", missing.join(", --").replace('_', "-"))));
    }
    Ok(Some(ParamVector::new(vals.into_iter().flatten().collect())))
}

fn require_theta(kind: ModelKind, o: &Opts) -> CliResult<ParamVector> {
    theta(kind, o)?.ok_or_else(|| {
        usage(format!(
            "parameters required: --theta or --{}",
            kind.param_names().join(" --").replace('_', "-")
        ))
    })
}

fn innovations(o: &Opts) -> CliResult<InnovationSpec> {
    let spec = match o.innov.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("normal") | Some("gaussian") => InnovationSpec::std_normal(),
        Some(s) => {
            let nu = s
                .strip_prefix("t:")
                .or_else(|| s.strip_prefix("student-t:"))
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| usage(format!("unknown innovation law '{s}'; use normal or t:NU")))?;
            InnovationSpec::student_t(nu)
        }
    };
    Ok(spec.with_sigma(o.sigma_eps.unwrap_or(1.0)))
}

fn seed(m: &RunManifest) -> CliResult<u64> {
    m.seed
        .ok_or_else(|| usage(format!("--seed is required (or set {SEED_ENV})")))
}

fn input(o: &Opts) -> CliResult<crate::model::Series> {
    let path = o.input.as_deref().ok_or_else(|| usage("--in is required"))?;
    Ok(load_series(path, o.column.as_deref().unwrap_or("x"))?)
}

fn optimizer(o: &Opts) -> OptimizerConfig {
    let d = OptimizerConfig::default();
    OptimizerConfig {
        max_iters: o.max_iters.unwrap_or(d.max_iters),
        restarts: o.restarts.unwrap_or(d.restarts),
        ..d
    }
}

fn trunc(o: &Opts) -> TruncationSpec {
    TruncationSpec::from_t1(o.t1.unwrap_or(1))
}

fn level(o: &Opts) -> f64 {
    o.level.unwrap_or(0.9)
}

fn scheme(s: &str) -> CliResult<Scheme> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn write_table(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> CliResult<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    Ok(io::emit_text(Some(path), &text)?)
}

/// Executes the manifest, writing results to disk or standard output.
pub fn run_command(m: &RunManifest) -> CliResult<()> {
    let o = &m.flags;
    let out = m.output.as_deref();
    match m.command {
        CommandKind::Simulate => {
            let kind = model(o)?;
            let th = require_theta(kind, o)?;
            let t = o.t.ok_or_else(|| usage("--T is required"))?;
            let s = simulate(
                kind,
                &th,
                &innovations(o)?,
                t,
                o.burn_in.unwrap_or(DEFAULT_BURN_IN),
                seed(m)?,
            )?;
            match out {
                Some(p) => write_series(p, &s)?,
                None => {
                    let mut buf = Vec::new();
                    write_series_to(&mut buf, &s).map_err(|e| Error::Io(e.to_string()))?;
                    io::emit_text(None, &String::from_utf8_lossy(&buf))?;
                }
            }
        }
        CommandKind::Estimate => {
            let kind = model(o)?;
            let s = input(o)?;
            let r = estimate(kind, &s, &optimizer(o))?;
            let mut obj = Map::new();
            obj.insert("model".into(), json!(kind));
            obj.insert("T".into(), json!(s.len()));
            for (name, v) in kind.param_names().iter().zip(r.theta_hat.as_slice()) {
                obj.insert(format!("{name}_hat"), json!(v));
            }
            obj.insert("theta_hat".into(), json!(r.theta_hat));
            obj.insert("upsilon_hat".into(), json!(matrix_rows(&r.upsilon_hat)));
            obj.insert("sigma_eps2_hat".into(), json!(r.sigma_eps2_hat));
            obj.insert("kurtosis_hat".into(), json!(r.kurtosis_hat));
            obj.insert("objective".into(), json!(r.objective));
            obj.insert("iterations".into(), json!(r.iterations));
            obj.insert("converged".into(), json!(r.converged));
            obj.insert("clamped".into(), json!(r.clamped));
            obj.insert("warnings".into(), json!(r.warnings));
            emit_json(out, &Value::Object(obj))?;
        }
        CommandKind::Predict => {
            let kind = model(o)?;
            let s = input(o)?;
            let th = match theta(kind, o)? {
                Some(t) => t,
                None => estimate(kind, &s, &optimizer(o))?.theta_hat,
            };
            let tr = trunc(o);
            let e = evaluate_prediction(kind, &th, &s, &tr)?;
            emit_json(
                out,
                &json!({
                    "model": kind,
                    "theta": th,
                    "t1": tr.t1,
                    "value": e.value,
                    "gradient": e.gradient.as_slice(),
                    "hessian": matrix_rows(&e.hessian),
                    "tail_mass": e.tail_mass,
                }),
            )?;
        }
        CommandKind::Ci => {
            let kind = model(o)?;
            let s = input(o)?;
            let sch = scheme(o.scheme.as_deref().unwrap_or("spl"))?;
            let lvl = level(o);
            let cfg = optimizer(o);
            let mut extra = Map::new();
            let ci = match sch {
                Scheme::SampleSplit => {
                    let plan = make_split_plan(
                        s.len(),
                        o.a.unwrap_or(DEFAULT_A_EXP),
                        o.b.unwrap_or(DEFAULT_B_EXP),
                    )?;
                    extra.insert("T_E".into(), json!(plan.t_e));
                    extra.insert("T_P".into(), json!(plan.t_p));
                    extra.insert("a".into(), json!(plan.a_exp));
                    extra.insert("b".into(), json!(plan.b_exp));
                    extra.insert("window_ratio".into(), json!(plan.window_ratio()));
                    ci_sample_split_with(kind, &s, &plan, lvl, &cfg)?
                }
                Scheme::TwoProcess => {
                    let path = o
                        .est_in
                        .as_deref()
                        .ok_or_else(|| usage("the 2ip scheme needs --est-in"))?;
                    let est = load_series(path, o.column.as_deref().unwrap_or("x"))?;
                    extra.insert("T_est".into(), json!(est.len()));
                    ci_two_process_with(kind, &est, &s, &trunc(o), lvl, &cfg)?
                }
                Scheme::NaivePlugin => ci_naive_plugin_with(kind, &s, &trunc(o), lvl, &cfg)?,
            };
            let mut obj = Map::new();
            obj.insert("model".into(), json!(kind));
            obj.insert("scheme".into(), json!(ci.scheme));
            obj.insert("level".into(), json!(ci.level));
            obj.insert("center".into(), json!(ci.center));
            obj.insert("lower".into(), json!(ci.lower()));
            obj.insert("upper".into(), json!(ci.upper()));
            obj.insert("half_width".into(), json!(ci.half_width));
            obj.insert("v_hat".into(), json!(ci.v_hat));
            obj.insert("scale".into(), json!(ci.scale));
            obj.insert("T".into(), json!(s.len()));
            obj.extend(extra);
            obj.insert("clamped".into(), json!(ci.clamped));
            obj.insert("warnings".into(), json!(ci.warnings));
            emit_json(out, &Value::Object(obj))?;
        }
        CommandKind::Coverage => {
            let kind = model(o)?;
            let th = require_theta(kind, o)?;
            let t = o.t.ok_or_else(|| usage("--T is required"))?;
            let reps = o.reps.ok_or_else(|| usage("--reps is required"))?;
            let mut cfg = ExperimentConfig::new(kind, th, t, reps, seed(m)?);
            cfg.innov = innovations(o)?;
            if let Some(list) = &o.schemes {
                cfg.schemes = list.iter().map(|s| scheme(s)).collect::<CliResult<_>>()?;
            }
            cfg.a_exp = o.a.unwrap_or(DEFAULT_A_EXP);
            cfg.b_exp = o.b.unwrap_or(DEFAULT_B_EXP);
            cfg.level = level(o);
            cfg.trunc = trunc(o);
            cfg.burn_in = o.burn_in.unwrap_or(DEFAULT_BURN_IN);
            cfg.optimizer = optimizer(o);
            cfg.exclude_clamped = o.exclude_clamped.unwrap_or(false);
            let report = match o.jobs {
                Some(j) => run_coverage_with_jobs(&cfg, j)?,
                None => run_coverage(&cfg)?,
            };
            if let Some(p) = &o.table {
                write_table(
                    p,
                    "scheme,coverage,avg_half_width,reps_used,failures,clamped",
                    report.schemes.iter().map(|s| {
                        format!(
                            "{},{:.16e},{:.16e},{},{},{}",
                            s.scheme, s.coverage, s.avg_half_width, s.reps_used, s.failures, s.clamped
                        )
                    }),
                )?;
            }
            emit_json(out, &report)?;
        }
        CommandKind::Check => {
            let kind = model(o)?;
            let th = require_theta(kind, o)?;
            let s = match &o.input {
                Some(_) => input(o)?,
                None => {
                    let t = o.t.ok_or_else(|| usage("--in or --T is required"))?;
                    simulate(kind, &th, &innovations(o)?, t, o.burn_in.unwrap_or(DEFAULT_BURN_IN), seed(m)?)?
                }
            };
            let g = gradient_check(kind, &th, &s, &trunc(o), o.h.unwrap_or(1e-5))?;
            let grid = o.t1_grid.clone().unwrap_or_else(|| {
                let n = s.len();
                vec![(n / 4).max(1), (n / 2).max(1), (3 * n / 4).max(1)]
            });
            let decay = truncation_decay(kind, &th, &s, &grid)?;
            if let Some(p) = &o.table {
                write_table(p, "t1,gap", decay.iter().map(|r| format!("{},{:.16e}", r.t1, r.gap)))?;
            }
            emit_json(
                out,
                &json!({
                    "model": kind,
                    "theta": th,
                    "T": s.len(),
                    "h": o.h.unwrap_or(1e-5),
                    "gradient_err": g.gradient_err,
                    "hessian_err": g.hessian_err,
                    "max_err": g.max_err(),
                    "decay_table": decay,
                }),
            )?;
        }
        CommandKind::Risk => {
            let kind = model(o)?;
            if kind != ModelKind::Tgarch11 {
                return Err(Error::Unsupported { op: "risk", kind }.into());
            }
            let s = input(o)?;
            let a = o.risk_level.unwrap_or(0.05);
            let th = match theta(kind, o)? {
                Some(t) => t,
                None => estimate(kind, &s, &optimizer(o))?.theta_hat,
            };
            let tr = trunc(o);
            let resid = standardized_residuals(kind, &th, &s)?;
            let rl = RiskLevel::from_residuals(&resid, a)?;
            let sigma = evaluate_prediction(kind, &th, &s, &tr)?.value;
            emit_json(
                out,
                &json!({
                    "model": kind,
                    "theta": th,
                    "a": a,
                    "xi_a": rl.xi_a,
                    "mu_a": rl.mu_a,
                    "sigma_next": sigma,
                    "var": conditional_var(kind, &th, &s, &tr, rl.xi_a)?,
                    "es": conditional_es(kind, &th, &s, &tr, rl.mu_a)?,
                }),
            )?;
        }
    }
    Ok(())
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match build_manifest(cli).and_then(|m| run_command(&m)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
