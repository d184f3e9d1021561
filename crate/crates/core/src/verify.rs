//! Monte Carlo checks: interval coverage, derivative accuracy, truncation
//! decay and asymptotic normality of the estimators.
//!
//! Replication `i` draws its randomness from a ChaCha stream keyed by
//! `(seed, i)` only, and results are reduced in replication order, so
//! reports do not depend on the number of worker threads.

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{arma_asymptotic_covariance, estimate, symmetrize};
use crate::interval::{interval_from_estimate, make_split_plan, Scheme, DEFAULT_A_EXP, DEFAULT_B_EXP};
use crate::model::{
    ensure_valid, simulate, simulate_path, InnovationSpec, ModelKind, ParamVector, Series,
    DEFAULT_BURN_IN,
};
use crate::optim::OptimizerConfig;
use crate::predict::{evaluate_prediction, prediction_gap, TruncationSpec};
use crate::stats::{ks_statistic_normal, two_sided_z};

pub const LONG_RUN_LEN: usize = 1_000_000;
pub const LONG_RUN_DROP: usize = 1000;

fn replication_rng(seed: u64, i: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::structural("jobs must be positive")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::structural(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ModelKind,
    pub theta0: ParamVector,
    pub innov: InnovationSpec,
    #[serde(rename = "T")]
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub a_exp: f64,
    pub b_exp: f64,
    pub level: f64,
    /// Truncation for the two-process and plug-in schemes.
    pub trunc: TruncationSpec,
    pub burn_in: usize,
    pub optimizer: OptimizerConfig,
    /// Count boundary fits as failures instead of using them.
    pub exclude_clamped: bool,
}

impl ExperimentConfig {
    pub fn new(kind: ModelKind, theta0: ParamVector, t: usize, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            theta0,
            innov: InnovationSpec::std_normal(),
            t,
            reps,
            seed,
            schemes: vec![Scheme::TwoProcess, Scheme::SampleSplit],
            a_exp: DEFAULT_A_EXP,
            b_exp: DEFAULT_B_EXP,
            level: 0.9,
            trunc: TruncationSpec::full(),
            burn_in: DEFAULT_BURN_IN,
            optimizer: OptimizerConfig::default(),
            exclude_clamped: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::structural("reps must be at least 1"));
        }
        if self.t < 8 {
            return Err(Error::structural(format!("T must be at least 8, got {}", self.t)));
        }
        if self.schemes.is_empty() {
            return Err(Error::structural("no schemes requested"));
        }
        if self.trunc.t1 == 0 || self.trunc.t1 > self.t {
            return Err(Error::structural("truncation point outside the sample"));
        }
        ensure_valid(self.kind, &self.theta0)?;
        reject_test_hook(&self.innov)?;
        two_sided_z(self.level)?;
        if self.schemes.contains(&Scheme::SampleSplit) {
            make_split_plan(self.t, self.a_exp, self.b_exp)?;
        }
        Ok(())
    }
}

fn reject_test_hook(innov: &InnovationSpec) -> Result<()> {
    if innov.is_test_hook() {
        Err(Error::structural(
            "the zero-innovation stream is a recursion test hook and cannot drive estimation",
        ))
    } else {
        Ok(())
    }
}

/// What one scheme produced in one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub center: f64,
    pub v_hat: f64,
    pub scale: f64,
    /// ψ at θ₀ on the same window and truncation.
    pub truth: f64,
    pub clamped: bool,
}

impl SchemeOutcome {
    pub fn covered(&self, z: f64) -> bool {
        (self.truth - self.center).abs() <= z * self.v_hat / self.scale
    }
}

/// Per replication, one entry per configured scheme; `None` marks a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub schemes: Vec<Option<SchemeOutcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub coverage: f64,
    pub avg_half_width: f64,
    pub reps_used: usize,
    pub failures: usize,
    /// Boundary fits among the replications used.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t1: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Finite-difference check at θ₀ on the first replication's sample.
    pub gradient_check_max_err: Option<f64>,
    /// Truncation gaps at θ₀ on the first replication's sample.
    pub decay_table: Vec<DecayRow>,
    /// KS distance of the coverage pivots (ψ₀ − ψ̂)·scale/v̂ of the first
    /// scheme from N(0,1).
    pub ks_statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kind: ModelKind,
    #[serde(rename = "T")]
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    pub schemes: Vec<SchemeSummary>,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub outcomes: Vec<ReplicationOutcome>,
    #[serde(skip)]
    exclude_clamped: bool,
}

impl CoverageReport {
    pub fn summary(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    /// Recomputes the summaries at another confidence level from the stored
    /// replication outcomes.
    pub fn summaries_at(&self, level: f64) -> Result<Vec<SchemeSummary>> {
        let z = two_sided_z(level)?;
        let schemes: Vec<Scheme> = self.schemes.iter().map(|s| s.scheme).collect();
        Ok(summarize(&schemes, &self.outcomes, z, self.exclude_clamped))
    }
}

fn summarize(
    schemes: &[Scheme],
    outcomes: &[ReplicationOutcome],
    z: f64,
    exclude_clamped: bool,
) -> Vec<SchemeSummary> {
    schemes
        .iter()
        .enumerate()
        .map(|(j, &scheme)| {
            let (mut used, mut covered, mut clamped) = (0usize, 0usize, 0usize);
            let mut width = 0.0;
            for rep in outcomes {
                match rep.schemes[j] {
                    Some(o) if !(exclude_clamped && o.clamped) => {
                        used += 1;
                        covered += o.covered(z) as usize;
                        clamped += o.clamped as usize;
                        width += z * o.v_hat / o.scale;
                    }
                    _ => {}
                }
            }
            SchemeSummary {
                scheme,
                coverage: covered as f64 / used as f64,
                avg_half_width: width / used as f64,
                reps_used: used,
                failures: outcomes.len() - used,
                clamped,
            }
        })
        .collect()
}

fn one_scheme(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    x: &Series,
    y: Option<&Series>,
) -> Result<SchemeOutcome> {
    let (est_series, trunc, scale) = match scheme {
        Scheme::TwoProcess => {
            let y = y.expect("second process simulated");
            (y.clone(), cfg.trunc, (cfg.t as f64).sqrt())
        }
        Scheme::SampleSplit => {
            let plan = make_split_plan(cfg.t, cfg.a_exp, cfg.b_exp)?;
            (x.slice(1, plan.t_e)?, TruncationSpec::from_t1(plan.t_p), plan.m_te)
        }
        Scheme::NaivePlugin => (x.clone(), cfg.trunc, (cfg.t as f64).sqrt()),
    };
    let est = estimate(cfg.kind, &est_series, &cfg.optimizer)?;
    let ci = interval_from_estimate(&est, x, &trunc, cfg.level, scale, scheme)?;
    let truth = evaluate_prediction(cfg.kind, &cfg.theta0, x, &trunc)?.value;
    Ok(SchemeOutcome {
        center: ci.center,
        v_hat: ci.v_hat,
        scale,
        truth,
        clamped: ci.clamped,
    })
}

fn replicate(cfg: &ExperimentConfig, i: usize) -> ReplicationOutcome {
    let mut rng = replication_rng(cfg.seed, i);
    let seed_x = rng.next_u64();
    let seed_y = rng.next_u64();
    let fail = || ReplicationOutcome {
        schemes: vec![None; cfg.schemes.len()],
    };
    let Ok(x) = simulate(cfg.kind, &cfg.theta0, &cfg.innov, cfg.t, cfg.burn_in, seed_x) else {
        return fail();
    };
    let y = if cfg.schemes.contains(&Scheme::TwoProcess) {
        match simulate(cfg.kind, &cfg.theta0, &cfg.innov, cfg.t, cfg.burn_in, seed_y) {
            Ok(y) => Some(y),
            Err(_) => return fail(),
        }
    } else {
        None
    };
    let schemes = cfg
        .schemes
        .iter()
        .map(|&s| one_scheme(cfg, s, &x, y.as_ref()).ok())
        .collect();
    ReplicationOutcome { schemes }
}

/// Runs the coverage experiment on the global rayon pool.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    run_coverage_inner(cfg, None)
}

/// Runs the coverage experiment on a dedicated pool of `jobs` threads.
pub fn run_coverage_with_jobs(cfg: &ExperimentConfig, jobs: usize) -> Result<CoverageReport> {
    run_coverage_inner(cfg, Some(jobs))
}

fn run_coverage_inner(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<CoverageReport> {
    cfg.check()?;
    let outcomes: Vec<ReplicationOutcome> = with_jobs(jobs, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|i| replicate(cfg, i))
            .collect()
    })?;
    let z = two_sided_z(cfg.level)?;
    let schemes = summarize(&cfg.schemes, &outcomes, z, cfg.exclude_clamped);

    let diagnostics = match first_sample(cfg) {
        Some(x) => {
            let grid: Vec<usize> = [4, 2]
                .iter()
                .map(|d| cfg.t / d)
                .chain(std::iter::once(3 * cfg.t / 4))
                .filter(|&t1| t1 >= 1)
                .collect();
            Diagnostics {
                gradient_check_max_err: gradient_check(cfg.kind, &cfg.theta0, &x, &cfg.trunc, 1e-5)
                    .ok()
                    .map(|g| g.max_err()),
                decay_table: truncation_decay(cfg.kind, &cfg.theta0, &x, &grid).unwrap_or_default(),
                ks_statistic: pivot_ks(&outcomes, cfg.exclude_clamped),
            }
        }
        None => Diagnostics {
            gradient_check_max_err: None,
            decay_table: Vec::new(),
            ks_statistic: None,
        },
    };

    Ok(CoverageReport {
        kind: cfg.kind,
        t: cfg.t,
        reps: cfg.reps,
        seed: cfg.seed,
        level: cfg.level,
        schemes,
        diagnostics,
        outcomes,
        exclude_clamped: cfg.exclude_clamped,
    })
}

/// The first replication's X sample, regenerated without estimation.
fn first_sample(cfg: &ExperimentConfig) -> Option<Series> {
    let seed_x = replication_rng(cfg.seed, 0).next_u64();
    simulate(cfg.kind, &cfg.theta0, &cfg.innov, cfg.t, cfg.burn_in, seed_x).ok()
}

fn pivot_ks(outcomes: &[ReplicationOutcome], exclude_clamped: bool) -> Option<f64> {
    let pivots: Vec<f64> = outcomes
        .iter()
        .filter_map(|r| r.schemes[0])
        .filter(|o| o.v_hat > 0.0 && !(exclude_clamped && o.clamped))
        .map(|o| (o.truth - o.center) * o.scale / o.v_hat)
        .collect();
    (!pivots.is_empty()).then(|| ks_statistic_normal(&pivots))
}

/// Relative discrepancies between central finite differences and the
/// analytic derivatives, |fd − an| / max(|an|, 1e-2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub gradient_err: f64,
    pub hessian_err: f64,
}

impl GradientCheck {
    pub fn max_err(&self) -> f64 {
        self.gradient_err.max(self.hessian_err)
    }
}

fn rel_err(fd: f64, an: f64) -> f64 {
    (fd - an).abs() / an.abs().max(1e-2)
}

/// Central differences of ψ against ∇ψ and of ∇ψ against ∇²ψ.
pub fn gradient_check(
    kind: ModelKind,
    theta: &ParamVector,
    window: &Series,
    trunc: &TruncationSpec,
    h: f64,
) -> Result<GradientCheck> {
    if !(h > 0.0) {
        return Err(Error::structural("finite-difference step must be positive"));
    }
    let base = evaluate_prediction(kind, theta, window, trunc)?;
    let mut gradient_err: f64 = 0.0;
    let mut hessian_err: f64 = 0.0;
    for j in 0..kind.dim() {
        let mut up = theta.as_slice().to_vec();
        let mut dn = up.clone();
        up[j] += h;
        dn[j] -= h;
        // the actual step after rounding
        let step = up[j] - dn[j];
        let eu = evaluate_prediction(kind, &ParamVector::new(up), window, trunc)?;
        let ed = evaluate_prediction(kind, &ParamVector::new(dn), window, trunc)?;
        gradient_err = gradient_err.max(rel_err((eu.value - ed.value) / step, base.gradient[j]));
        for i in 0..kind.dim() {
            let fd = (eu.gradient[i] - ed.gradient[i]) / step;
            hessian_err = hessian_err.max(rel_err(fd, base.hessian[(i, j)]));
        }
    }
    Ok(GradientCheck {
        gradient_err,
        hessian_err,
    })
}

/// √T·|ψ(t1) − ψ(1)| for each t1 in the grid, sorted by t1.
pub fn truncation_decay(
    kind: ModelKind,
    theta: &ParamVector,
    window: &Series,
    t1_grid: &[usize],
) -> Result<Vec<DecayRow>> {
    let mut grid = t1_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    grid.into_iter()
        .map(|t1| {
            let gap = prediction_gap(
                kind,
                theta,
                window,
                &TruncationSpec::full(),
                &TruncationSpec::from_t1(t1),
            )?;
            Ok(DecayRow { t1, gap })
        })
        .collect()
}

/// Asymptotic covariance Υ₀ of √T(θ̂ − θ₀) at the true parameter.
///
/// Closed form for AR(1) and ARMA(1,1). For the GARCH family the
/// expectation E[∂σ²∂σ²′/σ⁴] is averaged along one long simulated path
/// (the `seed` stream), after dropping an initial stretch.
pub fn population_covariance(
    kind: ModelKind,
    theta0: &ParamVector,
    innov: &InnovationSpec,
    seed: u64,
) -> Result<DMatrix<f64>> {
    population_covariance_with_len(kind, theta0, innov, seed, LONG_RUN_LEN)
}

pub fn population_covariance_with_len(
    kind: ModelKind,
    theta0: &ParamVector,
    innov: &InnovationSpec,
    seed: u64,
    n: usize,
) -> Result<DMatrix<f64>> {
    ensure_valid(kind, theta0)?;
    reject_test_hook(innov)?;
    match kind {
        ModelKind::Ar1 => Ok(DMatrix::from_element(1, 1, 1.0 - theta0[0].powi(2))),
        ModelKind::Arma11 => Ok(arma_asymptotic_covariance(theta0, innov.sigma_eps.powi(2))),
        ModelKind::Garch11 | ModelKind::Tgarch11 => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX);
            let path = simulate_path(kind, theta0, innov, n + LONG_RUN_DROP, DEFAULT_BURN_IN, &mut rng)?;
            let r = kind.dim();
            let p = theta0.as_slice();
            let beta = p[r - 1];
            let mut d = vec![0.0; r];
            let mut lag = vec![0.0; r];
            let mut j = DMatrix::zeros(r, r);
            let mut m4 = 0.0;
            for t in 1..path.x.len() {
                let xp = path.x[t - 1];
                lag[0] = 1.0;
                if kind == ModelKind::Garch11 {
                    lag[1] = xp * xp;
                } else {
                    lag[1] = xp.max(0.0);
                    lag[2] = (-xp).max(0.0);
                }
                lag[r - 1] = path.vol[t - 1];
                for k in 0..r {
                    d[k] = lag[k] + beta * d[k];
                }
                if t < LONG_RUN_DROP {
                    continue;
                }
                // vol is σ² (GARCH) or σ (T-GARCH)
                let (sigma2, factor) = match kind {
                    ModelKind::Garch11 => (path.vol[t], 1.0),
                    _ => (path.vol[t].powi(2), 2.0 * path.vol[t]),
                };
                let g = DVector::from_iterator(r, d.iter().map(|v| factor * v));
                j.ger(1.0 / (sigma2 * sigma2), &g, &g, 1.0);
                m4 += path.x[t].powi(4) / (sigma2 * sigma2);
            }
            let count = (path.x.len() - LONG_RUN_DROP) as f64;
            j /= count;
            symmetrize(&mut j);
            let kappa = innov.fourth_moment().unwrap_or(m4 / count);
            let inv = j.cholesky().ok_or(Error::SingularCovariance)?.inverse();
            let mut u = inv * (kappa - 1.0);
            symmetrize(&mut u);
            Ok(u)
        }
    }
}

/// One replication of √T(θ̂ − θ₀).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledError {
    pub values: Vec<f64>,
    pub clamped: bool,
}

/// √T(θ̂ − θ₀) over independent replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingStudy {
    pub draws: Vec<ScaledError>,
    pub failures: usize,
}

/// Estimates returned by a pluggable estimator: θ̂ and a boundary flag.
pub type EstimatorFn<'a> = dyn Fn(&Series) -> Result<(ParamVector, bool)> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: ModelKind,
    pub theta0: ParamVector,
    pub innov: InnovationSpec,
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub optimizer: OptimizerConfig,
}

impl StudyConfig {
    pub fn new(kind: ModelKind, theta0: ParamVector, t: usize, reps: usize, seed: u64) -> Self {
        StudyConfig {
            kind,
            theta0,
            innov: InnovationSpec::std_normal(),
            t,
            reps,
            seed,
            burn_in: DEFAULT_BURN_IN,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Simulates `reps` samples and collects √T(θ̂ − θ₀) from the model's own
/// estimator.
pub fn sampling_study(cfg: &StudyConfig, jobs: Option<usize>) -> Result<SamplingStudy> {
    let est = |s: &Series| {
        estimate(cfg.kind, s, &cfg.optimizer).map(|r| (r.theta_hat, r.clamped))
    };
    sampling_study_with(cfg, jobs, &est)
}

pub fn sampling_study_with(
    cfg: &StudyConfig,
    jobs: Option<usize>,
    estimator: &EstimatorFn<'_>,
) -> Result<SamplingStudy> {
    ensure_valid(cfg.kind, &cfg.theta0)?;
    reject_test_hook(&cfg.innov)?;
    if cfg.reps == 0 {
        return Err(Error::structural("reps must be at least 1"));
    }
    let root_t = (cfg.t as f64).sqrt();
    let results: Vec<Option<ScaledError>> = with_jobs(jobs, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|i| {
                let seed_x = replication_rng(cfg.seed, i).next_u64();
                let x = simulate(cfg.kind, &cfg.theta0, &cfg.innov, cfg.t, cfg.burn_in, seed_x).ok()?;
                let (theta_hat, clamped) = estimator(&x).ok()?;
                let values = theta_hat
                    .as_slice()
                    .iter()
                    .zip(cfg.theta0.as_slice())
                    .map(|(a, b)| root_t * (a - b))
                    .collect();
                Some(ScaledError { values, clamped })
            })
            .collect()
    })?;
    let failures = results.iter().filter(|r| r.is_none()).count();
    Ok(SamplingStudy {
        draws: results.into_iter().flatten().collect(),
        failures,
    })
}

impl SamplingStudy {
    fn used(&self, exclude_clamped: bool) -> impl Iterator<Item = &ScaledError> {
        self.draws.iter().filter(move |d| !(exclude_clamped && d.clamped))
    }

    pub fn clamped(&self) -> usize {
        self.draws.iter().filter(|d| d.clamped).count()
    }

    /// Per-coordinate KS statistics of √T(θ̂ − θ₀)/√Υ₀ᵢᵢ against N(0,1).
    pub fn ks_per_coordinate(&self, upsilon0: &DMatrix<f64>, exclude_clamped: bool) -> Vec<f64> {
        (0..upsilon0.nrows())
            .map(|i| {
                let sd = upsilon0[(i, i)].sqrt();
                let z: Vec<f64> = self.used(exclude_clamped).map(|d| d.values[i] / sd).collect();
                ks_statistic_normal(&z)
            })
            .collect()
    }

    /// Sample covariance of √T(θ̂ − θ₀) (divisor n − 1).
    pub fn covariance(&self, exclude_clamped: bool) -> DMatrix<f64> {
        let rows: Vec<&ScaledError> = self.used(exclude_clamped).collect();
        let n = rows.len();
        let r = rows.first().map_or(0, |d| d.values.len());
        let mut mean = DVector::zeros(r);
        for d in &rows {
            mean += DVector::from_column_slice(&d.values);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(r, r);
        for d in &rows {
            let c = DVector::from_column_slice(&d.values) - &mean;
            cov.ger(1.0, &c, &c, 1.0);
        }
        cov / (n as f64 - 1.0)
    }

    /// ‖Σ̂ − Υ₀‖_F / ‖Υ₀‖_F.
    pub fn relative_frobenius_error(&self, upsilon0: &DMatrix<f64>, exclude_clamped: bool) -> f64 {
        (self.covariance(exclude_clamped) - upsilon0).norm() / upsilon0.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    /// Maximum over coordinates.
    pub ks_statistic: f64,
    pub per_coordinate: Vec<f64>,
    pub reps_used: usize,
    pub failures: usize,
    pub clamped: usize,
}

/// KS distance of the standardized estimation errors from N(0,1), maximized
/// over coordinates.
pub fn normality_check(
    kind: ModelKind,
    theta0: &ParamVector,
    innov: &InnovationSpec,
    t: usize,
    reps: usize,
    seed: u64,
) -> Result<NormalityReport> {
    let cfg = StudyConfig {
        innov: innov.clone(),
        ..StudyConfig::new(kind, theta0.clone(), t, reps, seed)
    };
    let study = sampling_study(&cfg, None)?;
    let upsilon0 = population_covariance(kind, theta0, innov, seed)?;
    Ok(normality_from_study(&study, &upsilon0, false))
}

pub fn normality_from_study(
    study: &SamplingStudy,
    upsilon0: &DMatrix<f64>,
    exclude_clamped: bool,
) -> NormalityReport {
    let per_coordinate = study.ks_per_coordinate(upsilon0, exclude_clamped);
    NormalityReport {
        ks_statistic: per_coordinate.iter().copied().fold(0.0, f64::max),
        per_coordinate,
        reps_used: study.used(exclude_clamped).count(),
        failures: study.failures,
        clamped: study.clamped(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1_cfg(reps: usize) -> ExperimentConfig {
        ExperimentConfig::new(ModelKind::Ar1, ParamVector::ar1(0.5), 200, reps, 42)
    }

    #[test]
    fn single_replication_coverage_is_binary() {
        let r = run_coverage(&ar1_cfg(1)).unwrap();
        for s in &r.schemes {
            assert!(s.coverage == 0.0 || s.coverage == 1.0);
            assert_eq!(s.reps_used + s.failures, 1);
        }
    }

    #[test]
    fn worker_count_does_not_change_report() {
        let cfg = ar1_cfg(40);
        let a = run_coverage_with_jobs(&cfg, 1).unwrap();
        let b = run_coverage_with_jobs(&cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn coverage_monotone_in_level() {
        let r = run_coverage(&ar1_cfg(100)).unwrap();
        let lo = r.summaries_at(0.8).unwrap();
        let hi = r.summaries_at(0.95).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            assert!(b.coverage >= a.coverage);
        }
    }

    #[test]
    fn zero_innovations_rejected() {
        let mut cfg = ar1_cfg(2);
        cfg.innov = InnovationSpec::zeros(1.0);
        assert!(run_coverage(&cfg).is_err());
    }

    #[test]
    fn ar1_gradient_check_is_exact() {
        let x = Series::new(vec![0.3, -1.2, 0.7]).unwrap();
        let g = gradient_check(ModelKind::Ar1, &ParamVector::ar1(0.5), &x, &TruncationSpec::full(), 0.25)
            .unwrap();
        assert!(g.max_err() <= 1e-12, "{g:?}");
    }

    #[test]
    fn ar1_decay_is_zero() {
        let x = simulate(ModelKind::Ar1, &ParamVector::ar1(0.5), &InnovationSpec::std_normal(), 50, 10, 1).unwrap();
        let rows = truncation_decay(ModelKind::Ar1, &ParamVector::ar1(0.5), &x, &[30, 1, 10]).unwrap();
        assert_eq!(rows.iter().map(|r| r.t1).collect::<Vec<_>>(), vec![1, 10, 30]);
        assert!(rows.iter().all(|r| r.gap == 0.0));
    }

    #[test]
    fn constant_estimator_has_unit_ks() {
        let cfg = StudyConfig::new(ModelKind::Ar1, ParamVector::ar1(0.5), 100, 200, 5);
        let fake = |_: &Series| Ok((ParamVector::ar1(0.9), false));
        let study = sampling_study_with(&cfg, None, &fake).unwrap();
        let rep = normality_from_study(&study, &DMatrix::from_element(1, 1, 0.75), false);
        assert!(rep.ks_statistic > 0.99);
    }

    #[test]
    fn garch_population_covariance_short_run() {
        let th = ParamVector::garch11(0.1, 0.1, 0.8);
        let u = population_covariance_with_len(
            ModelKind::Garch11,
            &th,
            &InnovationSpec::std_normal(),
            3,
            50_000,
        )
        .unwrap();
        assert!(u.symmetric_eigenvalues().iter().all(|e| *e > 0.0));
    }
}
