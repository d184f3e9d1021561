use nalgebra::DMatrix;

use super::{require_len, EstimationResult};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ParamVector, Series, DEFAULT_DELTA};

/// β̂ = Σ X_t X_{t−1} / Σ X²_{t−1}, clamped into [−1+δ, 1−δ].
pub fn estimate_ar1_ols(series: &Series) -> Result<EstimationResult> {
    require_len(series, 3, "AR(1) OLS")?;
    let x = series.values();
    let (num, den) = x
        .windows(2)
        .fold((0.0, 0.0), |(n, d), w| (n + w[1] * w[0], d + w[0] * w[0]));
    if den == 0.0 {
        return Err(Error::DegenerateSeries(
            "all lagged observations are zero".into(),
        ));
    }
    let raw = num / den;
    let bound = 1.0 - DEFAULT_DELTA;
    let beta = raw.clamp(-bound, bound);
    let clamped = beta != raw;
    let mut warnings = Vec::new();
    if clamped {
        warnings.push(format!("OLS estimate {raw} clamped to {beta}"));
    }
    let sse: f64 = x.windows(2).map(|w| (w[1] - beta * w[0]).powi(2)).sum();
    Ok(EstimationResult {
        kind: ModelKind::Ar1,
        theta_hat: ParamVector::ar1(beta),
        upsilon_hat: DMatrix::from_element(1, 1, 1.0 - beta * beta),
        sigma_eps2_hat: None,
        kurtosis_hat: None,
        objective: sse,
        iterations: 0,
        converged: true,
        clamped,
        warnings,
    })
}
