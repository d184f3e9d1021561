//! Parameter estimators and their asymptotic covariance estimates Υ̂.
//!
//! * AR(1): OLS, Υ̂ = 1 − β̂².
//! * ARMA(1,1): weighted least squares with the ARMA autocovariance as the
//!   weight matrix and ω profiled out in closed form.
//! * GARCH(1,1), T-GARCH(1,1): Gaussian QML with the sandwich-free
//!   covariance (κ̂ − 1)·J⁻¹.

mod ar1;
mod arma;
mod qml;

pub use ar1::estimate_ar1_ols;
pub use arma::{arma_asymptotic_covariance, arma_autocorrelation, arma_wls_objective, estimate_arma_wls};
pub use qml::{
    estimate_qml, gaussian_nll, qml_asymptotic_covariance, standardized_residuals,
    volatility_filter, VolatilityFilter,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ModelKind, ParamVector, Series};
use crate::optim::OptimizerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub kind: ModelKind,
    pub theta_hat: ParamVector,
    /// Estimated asymptotic covariance of √T(θ̂ − θ₀).
    pub upsilon_hat: DMatrix<f64>,
    /// Innovation variance (ARMA only).
    pub sigma_eps2_hat: Option<f64>,
    /// Fourth moment of the standardized innovations (GARCH family only).
    pub kurtosis_hat: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// θ̂ sits on the boundary of Θ; asymptotic normality is not claimed.
    pub clamped: bool,
    pub warnings: Vec<String>,
}

/// Dispatches to the estimator of `kind`.
pub fn estimate(kind: ModelKind, series: &Series, cfg: &OptimizerConfig) -> Result<EstimationResult> {
    match kind {
        ModelKind::Ar1 => estimate_ar1_ols(series),
        ModelKind::Arma11 => estimate_arma_wls(series, cfg),
        ModelKind::Garch11 | ModelKind::Tgarch11 => estimate_qml(kind, series, cfg),
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub(crate) fn require_len(series: &Series, min: usize, what: &str) -> Result<()> {
    if series.len() < min {
        return Err(Error::structural(format!(
            "{what} needs at least {min} observations, got {}",
            series.len()
        )));
    }
    Ok(())
}
