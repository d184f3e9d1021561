use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{require_len, symmetrize, EstimationResult};
use crate::error::{Error, Result};
use crate::model::{ensure_valid, ModelKind, ParamVector, Series, DEFAULT_DELTA};
use crate::optim::{nelder_mead, Bounds, InitPolicy, Minimum, OptimizerConfig};
use crate::stats::population_variance;

const MIN_LEN: usize = 50;
const BOUNDARY_TOL: f64 = 1e-7;
const LN_2PI: f64 = 1.8378770664093453;

/// Filtered volatility σ̃_t²(θ), t = 1..T, and optionally ∂σ̃_t²/∂θ.
///
/// The presample observation is zero and the presample variance is the
/// sample variance (GARCH) or the presample σ is the sample standard
/// deviation (T-GARCH).
#[derive(Debug, Clone)]
pub struct VolatilityFilter {
    pub sigma2: Vec<f64>,
    /// One row per t, one column per parameter. Empty unless requested.
    pub dsigma2: Vec<Vec<f64>>,
}

fn require_volatility(kind: ModelKind, op: &'static str) -> Result<()> {
    if kind.is_volatility_model() {
        Ok(())
    } else {
        Err(Error::Unsupported { op, kind })
    }
}

pub fn volatility_filter(
    kind: ModelKind,
    theta: &ParamVector,
    series: &Series,
    derivatives: bool,
) -> Result<VolatilityFilter> {
    require_volatility(kind, "volatility_filter")?;
    ensure_valid(kind, theta)?;
    let x = series.values();
    let p = theta.as_slice();
    let r = kind.dim();
    let n = x.len();
    let mut sigma2 = Vec::with_capacity(n);
    let mut dsigma2 = Vec::with_capacity(if derivatives { n } else { 0 });
    match kind {
        ModelKind::Garch11 => {
            let (omega, alpha, beta) = (p[0], p[1], p[2]);
            let mut prev_x = 0.0;
            let mut s2 = population_variance(x);
            let mut d = [0.0; 3];
            for &xt in x {
                let lag = [1.0, prev_x * prev_x, s2];
                s2 = omega + alpha * lag[1] + beta * lag[2];
                sigma2.push(s2);
                if derivatives {
                    for j in 0..3 {
                        d[j] = lag[j] + beta * d[j];
                    }
                    dsigma2.push(d.to_vec());
                }
                prev_x = xt;
            }
        }
        ModelKind::Tgarch11 => {
            let (omega, ap, am, beta) = (p[0], p[1], p[2], p[3]);
            let mut prev_x: f64 = 0.0;
            let mut s = population_variance(x).sqrt();
            let mut e = [0.0; 4];
            for &xt in x {
                let lag = [1.0, prev_x.max(0.0), (-prev_x).max(0.0), s];
                s = omega + ap * lag[1] + am * lag[2] + beta * lag[3];
                sigma2.push(s * s);
                if derivatives {
                    for j in 0..4 {
                        e[j] = lag[j] + beta * e[j];
                    }
                    dsigma2.push(e.iter().map(|v| 2.0 * s * v).collect());
                }
                prev_x = xt;
            }
        }
        _ => unreachable!(),
    }
    debug_assert!(dsigma2.iter().all(|d: &Vec<f64>| d.len() == r));
    Ok(VolatilityFilter { sigma2, dsigma2 })
}

/// Allocation-free −log L̃ for the optimizer; θ is trusted.
fn nll_unchecked(kind: ModelKind, p: &[f64], x: &[f64], presample_var: f64) -> f64 {
    let mut acc = 0.0;
    match kind {
        ModelKind::Garch11 => {
            let (omega, alpha, beta) = (p[0], p[1], p[2]);
            let mut prev_x = 0.0;
            let mut s2 = presample_var;
            for &xt in x {
                s2 = omega + alpha * prev_x * prev_x + beta * s2;
                acc += s2.ln() + xt * xt / s2;
                prev_x = xt;
            }
        }
        ModelKind::Tgarch11 => {
            let (omega, ap, am, beta) = (p[0], p[1], p[2], p[3]);
            let mut prev_x: f64 = 0.0;
            let mut s = presample_var.sqrt();
            for &xt in x {
                s = omega + ap * prev_x.max(0.0) + am * (-prev_x).max(0.0) + beta * s;
                let s2 = s * s;
                acc += s2.ln() + xt * xt / s2;
                prev_x = xt;
            }
        }
        _ => unreachable!(),
    }
    0.5 * (x.len() as f64 * LN_2PI + acc)
}

/// Gaussian negative quasi log-likelihood ½Σ[log(2πσ̃_t²) + X_t²/σ̃_t²].
pub fn gaussian_nll(kind: ModelKind, theta: &ParamVector, series: &Series) -> Result<f64> {
    require_volatility(kind, "gaussian_nll")?;
    ensure_valid(kind, theta)?;
    let x = series.values();
    let v = nll_unchecked(kind, theta.as_slice(), x, population_variance(x));
    debug_assert!((LN_2PI - (2.0 * PI).ln()).abs() < 1e-15);
    Ok(v)
}

/// X_t / σ̃_t(θ).
pub fn standardized_residuals(kind: ModelKind, theta: &ParamVector, series: &Series) -> Result<Vec<f64>> {
    let f = volatility_filter(kind, theta, series, false)?;
    Ok(series
        .values()
        .iter()
        .zip(&f.sigma2)
        .map(|(x, s2)| x / s2.sqrt())
        .collect())
}

/// Sample covariance estimate (κ̂ − 1)·J⁻¹ with κ̂ = mean X⁴/σ̃⁴ and
/// J = mean ∂σ̃²∂σ̃²′/σ̃⁴. Returns (Υ̂, κ̂).
pub fn qml_asymptotic_covariance(
    kind: ModelKind,
    theta: &ParamVector,
    series: &Series,
) -> Result<(DMatrix<f64>, f64)> {
    let f = volatility_filter(kind, theta, series, true)?;
    let r = kind.dim();
    let n = series.len() as f64;
    let mut j = DMatrix::zeros(r, r);
    let mut kappa = 0.0;
    for ((x, s2), d) in series.values().iter().zip(&f.sigma2).zip(&f.dsigma2) {
        let w = 1.0 / (s2 * s2);
        kappa += x.powi(4) * w;
        let d = DVector::from_column_slice(d);
        j.ger(w, &d, &d, 1.0);
    }
    kappa /= n;
    j /= n;
    symmetrize(&mut j);
    let chol = j.cholesky().ok_or(Error::SingularCovariance)?;
    let mut u = chol.inverse() * (kappa - 1.0);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    symmetrize(&mut u);
    Ok((u, kappa))
}

fn box_bounds(kind: ModelKind) -> Bounds {
    let big = 1.0 / DEFAULT_DELTA;
    let mut lower = vec![0.0; kind.dim()];
    let mut upper = vec![big; kind.dim()];
    lower[0] = DEFAULT_DELTA;
    *upper.last_mut().unwrap() = 1.0 - DEFAULT_DELTA;
    Bounds { lower, upper }
}

fn moment_starts(kind: ModelKind, x: &[f64]) -> Vec<Vec<f64>> {
    let var = population_variance(x).max(DEFAULT_DELTA);
    let sd = var.sqrt();
    // E[ε⁺] = E[ε⁻] ≈ 0.4 for standardized innovations
    [(0.05, 0.9), (0.1, 0.8), (0.2, 0.6)]
        .iter()
        .map(|&(a, b)| match kind {
            ModelKind::Garch11 => vec![(var * (1.0 - a - b)).max(DEFAULT_DELTA), a, b],
            _ => vec![(sd * (1.0 - b - 0.8 * a)).max(DEFAULT_DELTA), a, a, b],
        })
        .collect()
}

/// Gaussian QML for GARCH(1,1) and T-GARCH(1,1) by box-constrained simplex
/// search with several starting points.
pub fn estimate_qml(kind: ModelKind, series: &Series, cfg: &OptimizerConfig) -> Result<EstimationResult> {
    require_volatility(kind, "estimate_qml")?;
    require_len(series, MIN_LEN, "QML")?;
    let x = series.values();
    let presample = population_variance(x);
    if presample == 0.0 {
        return Err(Error::DegenerateSeries("zero sample variance".into()));
    }
    let bounds = box_bounds(kind);
    let objective = |p: &[f64]| -> f64 {
        if kind == ModelKind::Tgarch11 && p[1] + p[2] <= 0.0 {
            return f64::INFINITY;
        }
        nll_unchecked(kind, p, x, presample)
    };
    let starts = match &cfg.init_policy {
        InitPolicy::Moments => {
            let mut s = moment_starts(kind, x);
            s.truncate(cfg.restarts.max(1));
            s
        }
        InitPolicy::Fixed(theta) => {
            ensure_valid(kind, theta)?;
            vec![theta.as_slice().to_vec()]
        }
    };

    let mut best: Option<Minimum> = None;
    let mut iterations = 0;
    let mut any_converged = false;
    for s in &starts {
        let mut steps: Vec<f64> = vec![0.05; kind.dim()];
        steps[0] = 0.2 * s[0];
        let m = nelder_mead(objective, s, &steps, &bounds, cfg);
        iterations += m.iterations;
        any_converged |= m.converged;
        if best.as_ref().map_or(true, |b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::DegenerateSeries("quasi-likelihood is not finite".into()));
    }
    let clamped = bounds.touches(&best.x, BOUNDARY_TOL);
    let theta_hat = ParamVector::new(best.x.clone());
    let (upsilon_hat, kappa) = qml_asymptotic_covariance(kind, &theta_hat, series)?;
    let mut warnings = Vec::new();
    if clamped {
        warnings.push("estimate on the boundary of the parameter set".into());
    }
    if !any_converged {
        warnings.push("optimizer did not converge from any starting point".into());
    }
    Ok(EstimationResult {
        kind,
        theta_hat,
        upsilon_hat,
        sigma_eps2_hat: None,
        kurtosis_hat: Some(kappa),
        objective: best.f,
        iterations,
        converged: any_converged,
        clamped,
        warnings,
    })
}
