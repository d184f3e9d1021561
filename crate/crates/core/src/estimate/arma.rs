use nalgebra::DMatrix;

use super::{require_len, EstimationResult};
use crate::error::{Error, Result};
use crate::model::{ensure_valid, ModelKind, ParamVector, Series, DEFAULT_DELTA};
use crate::optim::{nelder_mead, Bounds, InitPolicy, OptimizerConfig};
use crate::stats::mean;
use crate::toeplitz::arma11_innovations;

const MIN_LEN: usize = 10;
const BOUNDARY_TOL: f64 = 1e-7;
const COMMON_ROOT_TOL: f64 = 1e-6;

/// Lag-k autocorrelation of the ARMA(1,1) process.
pub fn arma_autocorrelation(alpha: f64, beta: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let rho1 = (alpha + beta) * (1.0 + alpha * beta) / (1.0 + 2.0 * alpha * beta + alpha * alpha);
    rho1 * beta.powi(k as i32 - 1)
}

/// (X − ωι)′Γ⁻¹(X − ωι) where Γ is the autocovariance matrix of X for unit
/// innovation variance.
pub fn arma_wls_objective(theta: &ParamVector, series: &Series) -> Result<f64> {
    ensure_valid(ModelKind::Arma11, theta)?;
    let u: Vec<f64> = series.values().iter().map(|x| x - theta[0]).collect();
    Ok(arma11_innovations(theta[1], theta[2], &u).quadratic_form())
}

struct Profile {
    omega: f64,
    q: f64,
}

/// Minimizes the quadratic form over ω for fixed (α, β). The innovations
/// filter is linear, so filtering X and ι once each gives ω̂ by GLS.
fn profile(alpha: f64, beta: f64, x: &[f64], ones: &[f64]) -> Profile {
    let fx = arma11_innovations(alpha, beta, x);
    let fi = arma11_innovations(alpha, beta, ones);
    let (mut sxx, mut sxi, mut sii) = (0.0, 0.0, 0.0);
    for ((ex, ei), v) in fx.errors.iter().zip(&fi.errors).zip(&fx.variances) {
        sxx += ex * ex / v;
        sxi += ex * ei / v;
        sii += ei * ei / v;
    }
    let omega = sxi / sii;
    Profile {
        omega,
        q: sxx - sxi * omega,
    }
}

fn sample_autocorrelation(x: &[f64], k: usize) -> f64 {
    let m = mean(x);
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if c0 == 0.0 {
        return 0.0;
    }
    let ck: f64 = x.windows(k + 1).map(|w| (w[0] - m) * (w[k] - m)).sum();
    ck / c0
}

/// Moment starting values for (α, β).
fn moment_starts(x: &[f64]) -> Vec<[f64; 2]> {
    let r1 = sample_autocorrelation(x, 1);
    let r2 = sample_autocorrelation(x, 2);
    let beta = if r1.abs() > 1e-3 { (r2 / r1).clamp(-0.9, 0.9) } else { 0.1 };
    // (ρ₁ − β)α² + (2ρ₁β − 1 − β²)α + (ρ₁ − β) = 0, roots multiply to 1
    let a = r1 - beta;
    let b = 2.0 * r1 * beta - 1.0 - beta * beta;
    let alpha = if a.abs() < 1e-12 {
        0.0
    } else {
        let disc = b * b - 4.0 * a * a;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let (z1, z2) = (q / a, a / q);
            if z1.abs() <= z2.abs() { z1 } else { z2 }
        } else {
            0.0
        }
    };
    let alpha = alpha.clamp(-0.9, 0.9);
    let alpha = if alpha.abs() < 0.05 { 0.05_f64.copysign(r1) } else { alpha };
    vec![[alpha, beta], [0.5, beta], [-0.5, beta], [0.3, 0.3]]
}

/// Weighted least squares for ARMA(1,1) with ω profiled out by GLS.
pub fn estimate_arma_wls(series: &Series, cfg: &OptimizerConfig) -> Result<EstimationResult> {
    require_len(series, MIN_LEN, "ARMA(1,1) weighted least squares")?;
    let x = series.values();
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::DegenerateSeries("constant series".into()));
    }
    let ones = vec![1.0; x.len()];
    let bound = 1.0 - DEFAULT_DELTA;
    let bounds = Bounds {
        lower: vec![-bound; 2],
        upper: vec![bound; 2],
    };
    let objective = |p: &[f64]| -> f64 {
        if (p[0] + p[1]).abs() < DEFAULT_DELTA {
            return f64::INFINITY;
        }
        profile(p[0], p[1], x, &ones).q
    };

    let starts = match &cfg.init_policy {
        InitPolicy::Moments => {
            let mut s = moment_starts(x);
            s.truncate(cfg.restarts.max(1));
            s
        }
        InitPolicy::Fixed(theta) => {
            ensure_valid(ModelKind::Arma11, theta)?;
            vec![[theta[1], theta[2]]]
        }
    };

    let mut best: Option<crate::optim::Minimum> = None;
    let mut iterations = 0;
    let mut any_converged = false;
    for s in &starts {
        let m = nelder_mead(objective, s, &[0.1, 0.1], &bounds, cfg);
        iterations += m.iterations;
        any_converged |= m.converged;
        if best.as_ref().map_or(true, |b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::DegenerateSeries(
            "weighted least squares objective is not finite".into(),
        ));
    }
    let mut alpha = best.x[0];
    let mut beta = best.x[1];
    let clamped = bounds.touches(&best.x, BOUNDARY_TOL);
    // the parameter set excludes exact zeros
    if alpha.abs() < DEFAULT_DELTA {
        alpha = DEFAULT_DELTA.copysign(alpha);
    }
    if beta.abs() < DEFAULT_DELTA {
        beta = DEFAULT_DELTA.copysign(beta);
    }
    let prof = profile(alpha, beta, x, &ones);
    let sigma2 = prof.q / (x.len() as f64 - 3.0);
    let theta_hat = ParamVector::arma11(prof.omega, alpha, beta);

    let mut warnings = Vec::new();
    if (alpha + beta).abs() < COMMON_ROOT_TOL {
        warnings.push(format!(
            "near common root: alpha_hat + beta_hat = {:e}; covariance entries are unreliable",
            alpha + beta
        ));
    }
    if clamped {
        warnings.push("estimate on the boundary of the parameter set".into());
    }
    Ok(EstimationResult {
        kind: ModelKind::Arma11,
        upsilon_hat: arma_asymptotic_covariance(&theta_hat, sigma2),
        theta_hat,
        sigma_eps2_hat: Some(sigma2),
        kurtosis_hat: None,
        objective: prof.q,
        iterations,
        converged: any_converged,
        clamped,
        warnings,
    })
}

/// Asymptotic covariance of √T(θ̂ − θ) for the ARMA(1,1) estimator, in the
/// order (ω, α, β). The mean block decouples from (α, β).
pub fn arma_asymptotic_covariance(theta: &ParamVector, sigma_eps2: f64) -> DMatrix<f64> {
    let (alpha, beta) = (theta[1], theta[2]);
    let s2 = (alpha + beta).powi(2);
    let ab = 1.0 + alpha * beta;
    let ma = 1.0 - alpha * alpha;
    let ar = 1.0 - beta * beta;
    let mut u = DMatrix::zeros(3, 3);
    u[(0, 0)] = sigma_eps2 * (1.0 + alpha).powi(2) / (1.0 - beta).powi(2);
    u[(1, 1)] = ab * ab * ma / s2;
    u[(2, 2)] = ab * ab * ar / s2;
    u[(1, 2)] = -ab * ma * ar / s2;
    u[(2, 1)] = u[(1, 2)];
    u
}
