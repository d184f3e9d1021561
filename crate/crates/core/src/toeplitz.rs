//! Symmetric Toeplitz solves and the ARMA(1,1) innovations recursion.

use crate::error::{Error, Result};

/// Solves T x = b for the symmetric positive definite Toeplitz matrix with
/// first column `col` (Levinson recursion, O(n²)).
pub fn levinson_solve(col: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if col.len() < n || n == 0 {
        return Err(Error::structural("Toeplitz column shorter than right-hand side"));
    }
    let r0 = col[0];
    if !(r0 > 0.0) {
        return Err(Error::structural("Toeplitz diagonal must be positive"));
    }
    // normalize to unit diagonal; r[k] is the lag-k entry
    let r: Vec<f64> = col[..n].iter().map(|c| c / r0).collect();
    let rhs: Vec<f64> = b.iter().map(|v| v / r0).collect();

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    x[0] = rhs[0];
    if n == 1 {
        return Ok(x);
    }
    y[0] = -r[1];
    let mut alpha = -r[1];
    let mut beta = 1.0;
    let mut tmp = vec![0.0; n];
    for k in 1..n {
        beta *= 1.0 - alpha * alpha;
        if !(beta > 0.0) {
            return Err(Error::structural("Toeplitz matrix is not positive definite"));
        }
        let dot: f64 = (0..k).map(|i| r[i + 1] * x[k - 1 - i]).sum();
        let mu = (rhs[k] - dot) / beta;
        for i in 0..k {
            tmp[i] = x[i] + mu * y[k - 1 - i];
        }
        x[..k].copy_from_slice(&tmp[..k]);
        x[k] = mu;
        if k < n - 1 {
            let dot: f64 = (0..k).map(|i| r[i + 1] * y[k - 1 - i]).sum();
            alpha = -(r[k + 1] + dot) / beta;
            for i in 0..k {
                tmp[i] = y[i] + alpha * y[k - 1 - i];
            }
            y[..k].copy_from_slice(&tmp[..k]);
            y[k] = alpha;
        }
    }
    Ok(x)
}

/// Variance of X_t in units of the innovation variance, γ(0)/σ².
pub fn arma11_variance_ratio(alpha: f64, beta: f64) -> f64 {
    (1.0 + 2.0 * alpha * beta + alpha * alpha) / (1.0 - beta * beta)
}

/// One-step prediction errors of the zero-mean ARMA(1,1) process
/// `u_t = α e_{t−1} + β u_{t−1} + e_t` under its exact finite-sample
/// predictor, together with their variances in units of σ².
///
/// With `Γ₁` the autocovariance matrix for unit innovation variance,
/// `u′Γ₁⁻¹u = Σ err_n² / var_n`. Runs in O(n).
pub struct Innovations {
    pub errors: Vec<f64>,
    pub variances: Vec<f64>,
}

pub fn arma11_innovations(alpha: f64, beta: f64, u: &[f64]) -> Innovations {
    let n = u.len();
    let mut errors = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    let a2 = alpha * alpha;
    let mut v = arma11_variance_ratio(alpha, beta);
    let mut pred = 0.0;
    for i in 0..n {
        let err = u[i] - pred;
        errors.push(err);
        variances.push(v);
        pred = beta * u[i] + (alpha / v) * err;
        v = 1.0 + a2 - a2 / v;
    }
    Innovations { errors, variances }
}

impl Innovations {
    pub fn quadratic_form(&self) -> f64 {
        self.errors
            .iter()
            .zip(&self.variances)
            .map(|(e, v)| e * e / v)
            .sum()
    }
}
