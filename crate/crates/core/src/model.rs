//! Model families, parameter constraints and path simulation.
//!
//! Four one-lag families are supported:
//!
//! ```text
//! AR(1)        X_t = β X_{t-1} + ε_t
//! ARMA(1,1)    X_t - ω = α ε_{t-1} + β (X_{t-1} - ω) + ε_t
//! GARCH(1,1)   X_t = σ_t ε_t,  σ_t² = ω + α X_{t-1}² + β σ_{t-1}²
//! T-GARCH(1,1) X_t = σ_t ε_t,  σ_t  = ω + α⁺ X_{t-1}⁺ + α⁻ X_{t-1}⁻ + β σ_{t-1}
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margin used to turn the open constraints (|β| < 1, ω > 0, ...) into a
/// compact parameter set.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Default number of discarded start-up observations in [`simulate`].
pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ar1,
    Arma11,
    Garch11,
    Tgarch11,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Ar1,
        ModelKind::Arma11,
        ModelKind::Garch11,
        ModelKind::Tgarch11,
    ];

    /// Parameter dimension r.
    pub fn dim(self) -> usize {
        self.param_names().len()
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Ar1 => &["beta"],
            ModelKind::Arma11 => &["omega", "alpha", "beta"],
            ModelKind::Garch11 => &["omega", "alpha", "beta"],
            ModelKind::Tgarch11 => &["omega", "alpha_plus", "alpha_minus", "beta"],
        }
    }

    /// GARCH and T-GARCH require unit-variance innovations.
    pub fn is_volatility_model(self) -> bool {
        matches!(self, ModelKind::Garch11 | ModelKind::Tgarch11)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ar1 => "ar1",
            ModelKind::Arma11 => "arma11",
            ModelKind::Garch11 => "garch11",
            ModelKind::Tgarch11 => "tgarch11",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '(', ')', ','], "").as_str() {
            "ar1" => Ok(ModelKind::Ar1),
            "arma11" => Ok(ModelKind::Arma11),
            "garch11" => Ok(ModelKind::Garch11),
            "tgarch11" => Ok(ModelKind::Tgarch11),
            other => Err(Error::structural(format!("unknown model '{other}'"))),
        }
    }
}

/// Parameter vector θ, ordered as in [`ModelKind::param_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn ar1(beta: f64) -> Self {
        ParamVector(vec![beta])
    }

    pub fn arma11(omega: f64, alpha: f64, beta: f64) -> Self {
        ParamVector(vec![omega, alpha, beta])
    }

    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        ParamVector(vec![omega, alpha, beta])
    }

    pub fn tgarch11(omega: f64, alpha_plus: f64, alpha_minus: f64, beta: f64) -> Self {
        ParamVector(vec![omega, alpha_plus, alpha_minus, beta])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Memory parameter β, which is the last coordinate for every family.
    pub fn beta(&self) -> f64 {
        *self.0.last().expect("empty parameter vector")
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Outcome of [`validate_params`]: empty means the point lies in Θ.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdict {
    pub violations: Vec<String>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks θ against the compact parameter set of its family.
///
/// The log-moment stationarity condition of the GARCH family depends on the
/// innovation law and is left to [`stationarity_margin`].
pub fn validate_params(kind: ModelKind, theta: &ParamVector) -> Result<Verdict> {
    validate_params_with(kind, theta, DEFAULT_DELTA)
}

pub fn validate_params_with(kind: ModelKind, theta: &ParamVector, delta: f64) -> Result<Verdict> {
    if theta.len() != kind.dim() {
        return Err(Error::Dimension {
            kind,
            expected: kind.dim(),
            got: theta.len(),
        });
    }
    let mut v = Vec::new();
    if theta.as_slice().iter().any(|x| !x.is_finite()) {
        v.push("parameters must be finite".to_string());
        return Ok(Verdict { violations: v });
    }
    let bound = 1.0 - delta;
    match kind {
        ModelKind::Ar1 => {
            if theta[0].abs() > bound {
                v.push("|beta| <= 1-delta".into());
            }
        }
        ModelKind::Arma11 => {
            let (alpha, beta) = (theta[1], theta[2]);
            if alpha.abs() > bound {
                v.push("|alpha| <= 1-delta".into());
            }
            if beta.abs() > bound {
                v.push("|beta| <= 1-delta".into());
            }
            if alpha.abs() < delta {
                v.push("alpha != 0".into());
            }
            if beta.abs() < delta {
                v.push("beta != 0".into());
            }
            if (alpha + beta).abs() < delta {
                v.push("alpha != -beta".into());
            }
        }
        ModelKind::Garch11 => {
            let (omega, alpha, beta) = (theta[0], theta[1], theta[2]);
            if omega < delta {
                v.push("omega >= delta".into());
            }
            if alpha < 0.0 {
                v.push("alpha >= 0".into());
            }
            if beta < 0.0 {
                v.push("beta >= 0".into());
            }
            if beta > bound {
                v.push("beta <= 1-delta".into());
            }
        }
        ModelKind::Tgarch11 => {
            let (omega, ap, am, beta) = (theta[0], theta[1], theta[2], theta[3]);
            if omega < delta {
                v.push("omega >= delta".into());
            }
            if ap < 0.0 {
                v.push("alpha_plus >= 0".into());
            }
            if am < 0.0 {
                v.push("alpha_minus >= 0".into());
            }
            if beta < 0.0 {
                v.push("beta >= 0".into());
            }
            if beta > bound {
                v.push("beta <= 1-delta".into());
            }
            if ap + am <= 0.0 {
                v.push("alpha_plus + alpha_minus > 0".into());
            }
        }
    }
    Ok(Verdict { violations: v })
}

/// Like [`validate_params`] but turns violations into an error.
pub fn ensure_valid(kind: ModelKind, theta: &ParamVector) -> Result<()> {
    let verdict = validate_params(kind, theta)?;
    if verdict.is_ok() {
        Ok(())
    } else {
        Err(Error::InvalidParams {
            kind,
            violations: verdict.violations,
        })
    }
}

/// Innovation distribution before scaling by `sigma_eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationLaw {
    StdNormal,
    /// Student-t rescaled to unit variance; requires nu > 4.
    StdStudentT { nu: f64 },
    /// Resampling (with replacement) of centered draws.
    Empirical(Vec<f64>),
    /// Deterministic zero stream started from `X_0 = start`. Recursion tests only.
    Zeros { start: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    pub law: InnovationLaw,
    /// Innovation scale for AR(1)/ARMA(1,1); must be 1 for the GARCH family.
    pub sigma_eps: f64,
}

impl InnovationSpec {
    pub fn std_normal() -> Self {
        InnovationSpec {
            law: InnovationLaw::StdNormal,
            sigma_eps: 1.0,
        }
    }

    pub fn student_t(nu: f64) -> Self {
        InnovationSpec {
            law: InnovationLaw::StdStudentT { nu },
            sigma_eps: 1.0,
        }
    }

    pub fn empirical(draws: Vec<f64>) -> Self {
        InnovationSpec {
            law: InnovationLaw::Empirical(draws),
            sigma_eps: 1.0,
        }
    }

    pub fn zeros(start: f64) -> Self {
        InnovationSpec {
            law: InnovationLaw::Zeros { start },
            sigma_eps: 1.0,
        }
    }

    pub fn with_sigma(mut self, sigma_eps: f64) -> Self {
        self.sigma_eps = sigma_eps;
        self
    }

    pub fn is_test_hook(&self) -> bool {
        matches!(self.law, InnovationLaw::Zeros { .. })
    }

    /// E[ε⁴] of the unit-variance law, where it is known in closed form
    /// (or exactly computable from the empirical draws).
    pub fn fourth_moment(&self) -> Option<f64> {
        match &self.law {
            InnovationLaw::StdNormal => Some(3.0),
            InnovationLaw::StdStudentT { nu } => Some(3.0 * (nu - 2.0) / (nu - 4.0)),
            InnovationLaw::Empirical(d) => {
                let s = standardize(d, true).ok()?;
                Some(s.iter().map(|x| x.powi(4)).sum::<f64>() / s.len() as f64)
            }
            InnovationLaw::Zeros { .. } => None,
        }
    }

    fn check(&self, kind: ModelKind) -> Result<()> {
        if !(self.sigma_eps > 0.0 && self.sigma_eps.is_finite()) {
            return Err(Error::structural("sigma_eps must be positive"));
        }
        if kind.is_volatility_model() && self.sigma_eps != 1.0 {
            return Err(Error::structural(
                "GARCH-family models require unit-variance innovations (sigma_eps = 1)",
            ));
        }
        match &self.law {
            InnovationLaw::StdStudentT { nu } if !(*nu > 4.0) => Err(Error::structural(
                "standardized Student-t needs nu > 4 for a finite fourth moment",
            )),
            InnovationLaw::Empirical(d) if d.len() < 2 || d.iter().any(|x| !x.is_finite()) => Err(
                Error::structural("empirical innovations need at least two finite draws"),
            ),
            _ => Ok(()),
        }
    }
}

fn standardize(draws: &[f64], unit_variance: bool) -> Result<Vec<f64>> {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let mut out: Vec<f64> = draws.iter().map(|x| x - mean).collect();
    if unit_variance {
        let var = out.iter().map(|x| x * x).sum::<f64>() / n;
        if var <= 0.0 {
            return Err(Error::structural("empirical innovations have zero variance"));
        }
        let sd = var.sqrt();
        out.iter_mut().for_each(|x| *x /= sd);
    }
    Ok(out)
}

/// Draws unit-variance innovations (before `sigma_eps` scaling).
pub(crate) struct InnovationSampler {
    kind: SamplerKind,
}

enum SamplerKind {
    Normal,
    StudentT { dist: StudentT<f64>, scale: f64 },
    Empirical(Vec<f64>),
    Zeros,
}

impl InnovationSampler {
    pub(crate) fn new(spec: &InnovationSpec, unit_variance: bool) -> Result<Self> {
        let kind = match &spec.law {
            InnovationLaw::StdNormal => SamplerKind::Normal,
            InnovationLaw::StdStudentT { nu } => SamplerKind::StudentT {
                dist: StudentT::new(*nu).map_err(|e| Error::structural(e.to_string()))?,
                scale: ((nu - 2.0) / nu).sqrt(),
            },
            InnovationLaw::Empirical(d) => SamplerKind::Empirical(standardize(d, unit_variance)?),
            InnovationLaw::Zeros { .. } => SamplerKind::Zeros,
        };
        Ok(InnovationSampler { kind })
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Normal => StandardNormal.sample(rng),
            SamplerKind::StudentT { dist, scale } => dist.sample(rng) * scale,
            SamplerKind::Empirical(d) => d[rng.random_range(0..d.len())],
            SamplerKind::Zeros => 0.0,
        }
    }
}

/// Observed sample X_{t0}, ..., X_{t0+T-1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    t0: i64,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_start(values, 1)
    }

    pub fn with_start(values: Vec<f64>, t0: i64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::structural("series is empty"));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::structural(format!(
                "series value at t={} is not finite",
                t0 + i as i64
            )));
        }
        Ok(Series { values, t0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Sub-series X_{from..=to} using 1-based positions relative to the start.
    pub fn slice(&self, from: usize, to: usize) -> Result<Series> {
        if from == 0 || from > to || to > self.len() {
            return Err(Error::structural(format!(
                "slice {from}..={to} out of range for length {}",
                self.len()
            )));
        }
        Ok(Series {
            values: self.values[from - 1..to].to_vec(),
            t0: self.t0 + from as i64 - 1,
        })
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Simulates `t` observations after discarding `burn_in` start-up values.
///
/// The path starts at X = 0 (or the hook's start value) with σ² = ω/(1-β)
/// for GARCH and σ = ω/(1-β) for T-GARCH. The same arguments always give
/// bit-identical output.
pub fn simulate(
    kind: ModelKind,
    theta: &ParamVector,
    innov: &InnovationSpec,
    t: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Series> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    simulate_with_rng(kind, theta, innov, t, burn_in, &mut rng)
}

pub(crate) fn simulate_with_rng<R: Rng + ?Sized>(
    kind: ModelKind,
    theta: &ParamVector,
    innov: &InnovationSpec,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Series> {
    let path = simulate_path(kind, theta, innov, t, burn_in, rng)?;
    Series::new(path.x)
}

/// Simulated observations together with the latent volatility state
/// (σ_t² for GARCH, σ_t for T-GARCH, empty otherwise).
pub(crate) struct Path {
    pub x: Vec<f64>,
    pub vol: Vec<f64>,
}

pub(crate) fn simulate_path<R: Rng + ?Sized>(
    kind: ModelKind,
    theta: &ParamVector,
    innov: &InnovationSpec,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Path> {
    if t == 0 {
        return Err(Error::structural("T must be positive"));
    }
    ensure_valid(kind, theta)?;
    innov.check(kind)?;
    let sampler = InnovationSampler::new(innov, kind.is_volatility_model())?;
    let start = match innov.law {
        InnovationLaw::Zeros { start } => start,
        _ => 0.0,
    };
    let total = burn_in + t;
    let mut x = Vec::with_capacity(t);
    let mut vol = Vec::new();
    let p = theta.as_slice();
    match kind {
        ModelKind::Ar1 => {
            let beta = p[0];
            let mut prev = start;
            for i in 0..total {
                let cur = beta * prev + innov.sigma_eps * sampler.draw(rng);
                if i >= burn_in {
                    x.push(cur);
                }
                prev = cur;
            }
        }
        ModelKind::Arma11 => {
            let (omega, alpha, beta) = (p[0], p[1], p[2]);
            let mut prev = start;
            let mut prev_eps = 0.0;
            for i in 0..total {
                let eps = innov.sigma_eps * sampler.draw(rng);
                let cur = omega + alpha * prev_eps + beta * (prev - omega) + eps;
                if i >= burn_in {
                    x.push(cur);
                }
                prev = cur;
                prev_eps = eps;
            }
        }
        ModelKind::Garch11 => {
            let (omega, alpha, beta) = (p[0], p[1], p[2]);
            vol.reserve(t);
            let mut prev_x = start;
            let mut sigma2 = omega / (1.0 - beta);
            for i in 0..total {
                sigma2 = omega + alpha * prev_x * prev_x + beta * sigma2;
                debug_assert!(sigma2 >= omega);
                let cur = sigma2.sqrt() * sampler.draw(rng);
                if i >= burn_in {
                    x.push(cur);
                    vol.push(sigma2);
                }
                prev_x = cur;
            }
        }
        ModelKind::Tgarch11 => {
            let (omega, ap, am, beta) = (p[0], p[1], p[2], p[3]);
            vol.reserve(t);
            let mut prev_x: f64 = start;
            let mut sigma = omega / (1.0 - beta);
            for i in 0..total {
                sigma = omega + ap * prev_x.max(0.0) + am * (-prev_x).max(0.0) + beta * sigma;
                debug_assert!(sigma >= omega);
                let cur = sigma * sampler.draw(rng);
                if i >= burn_in {
                    x.push(cur);
                    vol.push(sigma);
                }
                prev_x = cur;
            }
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::structural("simulated path diverged"));
    }
    Ok(Path { x, vol })
}

/// Monte Carlo estimate of the log-moment E[ln(α ε² + β)] (GARCH) or
/// E[ln(α⁺ ε⁺ + α⁻ ε⁻ + β)] (T-GARCH).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityMargin {
    pub value: f64,
    /// Some draw made the log argument zero; `value` is then -inf.
    pub hit_zero: bool,
}

impl StationarityMargin {
    /// A negative margin certifies strict stationarity up to MC error.
    pub fn is_stationary(&self) -> bool {
        self.value < 0.0
    }
}

pub fn stationarity_margin(
    kind: ModelKind,
    theta: &ParamVector,
    innov: &InnovationSpec,
    n_draws: usize,
    seed: u64,
) -> Result<StationarityMargin> {
    if !kind.is_volatility_model() {
        return Err(Error::Unsupported {
            op: "stationarity_margin",
            kind,
        });
    }
    if n_draws < 1000 {
        return Err(Error::structural("stationarity_margin needs n_draws >= 1000"));
    }
    // The hook's start value is irrelevant here, but the zero stream is not a law.
    if innov.is_test_hook() {
        return Err(Error::structural("zero-noise hook has no innovation law"));
    }
    ensure_valid(kind, theta)?;
    innov.check(kind)?;
    let p = theta.as_slice();
    let beta = theta.beta();
    let slopes_zero = match kind {
        ModelKind::Garch11 => p[1] == 0.0,
        _ => p[1] == 0.0 && p[2] == 0.0,
    };
    if slopes_zero {
        let value = beta.ln();
        return Ok(StationarityMargin {
            value,
            hit_zero: value == f64::NEG_INFINITY,
        });
    }
    let sampler = InnovationSampler::new(innov, true)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..n_draws {
        let e = sampler.draw(&mut rng);
        let arg = match kind {
            ModelKind::Garch11 => p[1] * e * e + beta,
            _ => p[1] * e.max(0.0) + p[2] * (-e).max(0.0) + beta,
        };
        if arg <= 0.0 {
            return Ok(StationarityMargin {
                value: f64::NEG_INFINITY,
                hit_zero: true,
            });
        }
        sum += arg.ln();
    }
    Ok(StationarityMargin {
        value: sum / n_draws as f64,
        hit_zero: false,
    })
}
