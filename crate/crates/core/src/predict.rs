//! One-step prediction functions ψ with exact first and second derivatives.
//!
//! | model    | ψ_{T+1}                                   |
//! |----------|-------------------------------------------|
//! | AR(1)    | β X_T                                      |
//! | ARMA     | ω + Σ_k (−α)^k (α+β) (X_{T−k} − ω)          |
//! | GARCH    | Σ_k β^k (ω + α X²_{T−k})                    |
//! | T-GARCH  | Σ_k β^k (ω + α⁺ X⁺_{T−k} + α⁻ X⁻_{T−k})     |
//!
//! Observations before the truncation point `t1` (and all presample values)
//! are replaced by zeros. The infinite part of each series that only
//! involves ω is summed in closed form, so the returned value is the exact
//! truncated prediction function rather than a finite-window approximation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ensure_valid, ModelKind, ParamVector, Series};

/// Values substituted for t ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StartingValuePolicy {
    #[default]
    Zeros,
}

/// Values substituted for 1 ≤ t < t1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SplitConstantPolicy {
    #[default]
    Zeros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    /// First retained observation (1-based within the window).
    pub t1: usize,
    pub starting_values: StartingValuePolicy,
    pub split_constants: SplitConstantPolicy,
}

impl TruncationSpec {
    pub fn full() -> Self {
        Self::from_t1(1)
    }

    pub fn from_t1(t1: usize) -> Self {
        TruncationSpec {
            t1,
            starting_values: StartingValuePolicy::Zeros,
            split_constants: SplitConstantPolicy::Zeros,
        }
    }

    fn check(&self, window_len: usize) -> Result<()> {
        if self.t1 == 0 || self.t1 > window_len {
            return Err(Error::structural(format!(
                "truncation point t1={} outside window of length {window_len}",
                self.t1
            )));
        }
        Ok(())
    }
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self::full()
    }
}

/// ψ together with ∇ψ and ∇²ψ at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PredEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Closed-form contribution of the ω-only tail beyond the retained data.
    pub tail_mass: f64,
}

/// Retained observations, newest first: `x[k]` is X_{T−k}.
fn retained(window: &Series, trunc: &TruncationSpec) -> Result<Vec<f64>> {
    trunc.check(window.len())?;
    Ok(window.values()[trunc.t1 - 1..].iter().rev().copied().collect())
}

/// Σ_k w(k) f_k, Σ_k w'(k) f_k and Σ_k w''(k) f_k for w(k) = ρ^k, with
/// derivatives taken with respect to the ratio ρ.
fn power_sums(rho: f64, f: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    // ρ^k, ρ^{k-1}, ρ^{k-2}
    let (mut p0, mut p1, mut p2) = (1.0, 0.0, 0.0);
    for (k, fk) in f.enumerate() {
        let kf = k as f64;
        s0 += p0 * fk;
        if k >= 1 {
            s1 += kf * p1 * fk;
        }
        if k >= 2 {
            s2 += kf * (kf - 1.0) * p2 * fk;
        }
        p2 = p1;
        p1 = p0;
        p0 *= rho;
    }
    (s0, s1, s2)
}

/// Evaluates ψ^s(X^c_{t1:T}; θ) with exact gradient and Hessian.
pub fn evaluate_prediction(
    kind: ModelKind,
    theta: &ParamVector,
    window: &Series,
    trunc: &TruncationSpec,
) -> Result<PredEval> {
    ensure_valid(kind, theta)?;
    let x = retained(window, trunc)?;
    let n_kept = x.len() as i32;
    let p = theta.as_slice();
    let r = kind.dim();
    let mut g = DVector::zeros(r);
    let mut h = DMatrix::zeros(r, r);
    let (value, tail_mass) = match kind {
        ModelKind::Ar1 => {
            let xt = x[0];
            g[0] = xt;
            (p[0] * xt, 0.0)
        }
        ModelKind::Garch11 => {
            let (omega, alpha, beta) = (p[0], p[1], p[2]);
            let c = 1.0 - beta;
            let (a0, a1, a2) = power_sums(beta, x.iter().map(|v| v * v));
            g[0] = 1.0 / c;
            g[1] = a0;
            g[2] = omega / (c * c) + alpha * a1;
            h[(0, 2)] = 1.0 / (c * c);
            h[(1, 2)] = a1;
            h[(2, 2)] = 2.0 * omega / (c * c * c) + alpha * a2;
            (omega / c + alpha * a0, omega * beta.powi(n_kept) / c)
        }
        ModelKind::Tgarch11 => {
            let (omega, ap, am, beta) = (p[0], p[1], p[2], p[3]);
            let c = 1.0 - beta;
            let (u0, u1, u2) = power_sums(beta, x.iter().map(|v| v.max(0.0)));
            let (d0, d1, d2) = power_sums(beta, x.iter().map(|v| (-v).max(0.0)));
            g[0] = 1.0 / c;
            g[1] = u0;
            g[2] = d0;
            g[3] = omega / (c * c) + ap * u1 + am * d1;
            h[(0, 3)] = 1.0 / (c * c);
            h[(1, 3)] = u1;
            h[(2, 3)] = d1;
            h[(3, 3)] = 2.0 * omega / (c * c * c) + ap * u2 + am * d2;
            (omega / c + ap * u0 + am * d0, omega * beta.powi(n_kept) / c)
        }
        ModelKind::Arma11 => {
            let (omega, alpha, beta) = (p[0], p[1], p[2]);
            let s = alpha + beta;
            let d = 1.0 + alpha;
            // B(α) = Σ (−α)^k X_{T−k}; d/dα = −d/dρ at ρ = −α
            let (b0, b1r, b2) = power_sums(-alpha, x.iter().copied());
            let b1 = -b1r;
            g[0] = (1.0 - beta) / d;
            g[1] = -omega * (1.0 - beta) / (d * d) + b0 + s * b1;
            g[2] = -omega / d + b0;
            h[(0, 1)] = -(1.0 - beta) / (d * d);
            h[(0, 2)] = -1.0 / d;
            h[(1, 1)] = 2.0 * omega * (1.0 - beta) / (d * d * d) + 2.0 * b1 + s * b2;
            h[(1, 2)] = omega / (d * d) + b1;
            let tail = -s * omega * (-alpha).powi(n_kept) / d;
            (omega * (1.0 - beta) / d + s * b0, tail)
        }
    };
    // mirror the upper triangle
    for i in 0..r {
        for j in 0..i {
            h[(i, j)] = h[(j, i)];
        }
    }
    Ok(PredEval {
        value,
        gradient: g,
        hessian: h,
        tail_mass,
    })
}

/// Contribution of the observation k steps before the window end to ψ,
/// net of anything that survives zero substitution.
fn observation_term(kind: ModelKind, p: &[f64], k: usize, x: f64) -> f64 {
    match kind {
        // ψ = βX_T only ever uses the last value, which is always retained
        ModelKind::Ar1 => 0.0,
        ModelKind::Garch11 => p[1] * p[2].powi(k as i32) * x * x,
        ModelKind::Tgarch11 => p[3].powi(k as i32) * (p[1] * x.max(0.0) + p[2] * (-x).max(0.0)),
        ModelKind::Arma11 => (p[1] + p[2]) * (-p[1]).powi(k as i32) * x,
    }
}

/// √T · |ψ^s(t1_trunc) − ψ^s(t1_full)| with T the window length.
///
/// The two expansions differ only in the observations retained by one and
/// zeroed by the other, so the difference is summed directly over those
/// terms instead of subtracting two nearly equal values.
pub fn prediction_gap(
    kind: ModelKind,
    theta: &ParamVector,
    window: &Series,
    t1_full: &TruncationSpec,
    t1_trunc: &TruncationSpec,
) -> Result<f64> {
    ensure_valid(kind, theta)?;
    t1_full.check(window.len())?;
    t1_trunc.check(window.len())?;
    let (lo, hi) = if t1_full.t1 <= t1_trunc.t1 {
        (t1_full.t1, t1_trunc.t1)
    } else {
        (t1_trunc.t1, t1_full.t1)
    };
    let t = window.len();
    let p = theta.as_slice();
    let diff: f64 = (lo..hi)
        .map(|idx| observation_term(kind, p, t - idx, window.values()[idx - 1]))
        .sum();
    Ok((t as f64).sqrt() * diff.abs())
}

/// Empirical a-quantile ξ_a = inf{τ : F_n(τ) ≥ a}.
pub fn innovation_quantile(residuals: &[f64], a: f64) -> Result<f64> {
    check_level(a)?;
    let sorted = sorted_finite(residuals)?;
    Ok(sorted[quantile_rank(sorted.len(), a) - 1])
}

fn check_level(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(Error::structural(format!("risk level {a} outside (0,1)")))
    }
}

fn sorted_finite(residuals: &[f64]) -> Result<Vec<f64>> {
    if residuals.is_empty() {
        return Err(Error::structural("no residuals"));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::structural("residuals must be finite"));
    }
    let mut s = residuals.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// 1-based rank ⌈a·n⌉, guarding against a·n landing a rounding error above
/// an integer.
fn quantile_rank(n: usize, a: f64) -> usize {
    let x = a * n as f64;
    let nearest = x.round();
    let rank = if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (rank as usize).clamp(1, n)
}

/// Innovation quantile and expected-shortfall factor at level a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskLevel {
    pub a: f64,
    pub xi_a: f64,
    /// μ_a = −E[ε | ε < ξ_a].
    pub mu_a: f64,
}

impl RiskLevel {
    /// Empirical ξ_a and μ_a. The tail mean uses residuals strictly below
    /// ξ_a, falling back to the order statistic itself when none are.
    pub fn from_residuals(residuals: &[f64], a: f64) -> Result<Self> {
        check_level(a)?;
        let sorted = sorted_finite(residuals)?;
        let xi = sorted[quantile_rank(sorted.len(), a) - 1];
        let below: Vec<f64> = sorted.iter().copied().take_while(|&r| r < xi).collect();
        let tail_mean = if below.is_empty() {
            xi
        } else {
            below.iter().sum::<f64>() / below.len() as f64
        };
        let mu = -tail_mean;
        if mu < 0.0 {
            return Err(Error::structural(format!(
                "expected-shortfall factor {mu} is negative; residuals are not centered"
            )));
        }
        Ok(RiskLevel { a, xi_a: xi, mu_a: mu })
    }
}

fn tgarch_only(kind: ModelKind, op: &'static str) -> Result<()> {
    if kind == ModelKind::Tgarch11 {
        Ok(())
    } else {
        Err(Error::Unsupported { op, kind })
    }
}

/// VaR_a(X_{T+1} | past) = −ξ_a · σ_{T+1}.
pub fn conditional_var(
    kind: ModelKind,
    theta: &ParamVector,
    window: &Series,
    trunc: &TruncationSpec,
    xi_a: f64,
) -> Result<f64> {
    tgarch_only(kind, "conditional_var")?;
    if !xi_a.is_finite() {
        return Err(Error::structural("quantile must be finite"));
    }
    let psi = evaluate_prediction(kind, theta, window, trunc)?;
    Ok(-xi_a * psi.value)
}

/// ES_a(X_{T+1} | past) = μ_a · σ_{T+1}, non-negative for small a.
pub fn conditional_es(
    kind: ModelKind,
    theta: &ParamVector,
    window: &Series,
    trunc: &TruncationSpec,
    mu_a: f64,
) -> Result<f64> {
    tgarch_only(kind, "conditional_es")?;
    if !mu_a.is_finite() {
        return Err(Error::structural("shortfall factor must be finite"));
    }
    let psi = evaluate_prediction(kind, theta, window, trunc)?;
    Ok(mu_a * psi.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> Series {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ar1_value_and_derivatives() {
        let e = evaluate_prediction(
            ModelKind::Ar1,
            &ParamVector::ar1(0.3),
            &series(&[5.0, -1.0, 2.0]),
            &TruncationSpec::from_t1(2),
        )
        .unwrap();
        assert!((e.value - 0.6).abs() < 1e-15);
        assert_eq!(e.gradient.as_slice(), &[2.0]);
        assert_eq!(e.hessian[(0, 0)], 0.0);
    }

    #[test]
    fn garch_pure_tail() {
        let e = evaluate_prediction(
            ModelKind::Garch11,
            &ParamVector::garch11(1.0, 0.0, 0.5),
            &series(&[3.0, -2.0]),
            &TruncationSpec::full(),
        )
        .unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.gradient[0], 2.0);
    }

    #[test]
    fn garch_hand_computed() {
        // (0.1+0.1·1) + 0.8·(0.1+0.1·1) + 0.1·0.8²/(1−0.8)
        let e = evaluate_prediction(
            ModelKind::Garch11,
            &ParamVector::garch11(0.1, 0.1, 0.8),
            &series(&[1.0, -1.0]),
            &TruncationSpec::full(),
        )
        .unwrap();
        assert!((e.value - 0.68).abs() < 1e-14);
        assert!((e.tail_mass - 0.32).abs() < 1e-14);
    }

    #[test]
    fn arma_single_term() {
        let e = evaluate_prediction(
            ModelKind::Arma11,
            &ParamVector::arma11(0.0, 0.5, 0.3),
            &series(&[1.0]),
            &TruncationSpec::full(),
        )
        .unwrap();
        assert!((e.value - 0.8).abs() < 1e-15);
        assert_eq!(e.tail_mass, 0.0);
    }

    #[test]
    fn known_zero_hessian_entries() {
        let w = series(&[0.3, -1.2, 0.8, 2.0, -0.4]);
        let g = evaluate_prediction(
            ModelKind::Garch11,
            &ParamVector::garch11(0.2, 0.15, 0.7),
            &w,
            &TruncationSpec::full(),
        )
        .unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(g.hessian[(i, j)], 0.0);
        }
        let a = evaluate_prediction(
            ModelKind::Arma11,
            &ParamVector::arma11(0.5, 0.4, 0.2),
            &w,
            &TruncationSpec::full(),
        )
        .unwrap();
        assert_eq!(a.hessian[(0, 0)], 0.0);
        assert_eq!(a.hessian[(2, 2)], 0.0);
        let t = evaluate_prediction(
            ModelKind::Tgarch11,
            &ParamVector::tgarch11(0.2, 0.1, 0.2, 0.6),
            &w,
            &TruncationSpec::full(),
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.hessian[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn truncation_outside_window() {
        let w = series(&[1.0, 2.0]);
        for t1 in [0, 3] {
            assert!(evaluate_prediction(
                ModelKind::Ar1,
                &ParamVector::ar1(0.5),
                &w,
                &TruncationSpec::from_t1(t1)
            )
            .is_err());
        }
    }

    #[test]
    fn gap_identical_truncations() {
        let w = series(&[1.0, -2.0, 0.5]);
        let t = TruncationSpec::full();
        for (kind, theta) in [
            (ModelKind::Ar1, ParamVector::ar1(0.5)),
            (ModelKind::Garch11, ParamVector::garch11(0.1, 0.1, 0.8)),
        ] {
            assert_eq!(prediction_gap(kind, &theta, &w, &t, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(innovation_quantile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(innovation_quantile(&[7.5; 9], 0.13).unwrap(), 7.5);
        assert_eq!(innovation_quantile(&[1.0, 2.0, 3.0], 0.01).unwrap(), 1.0);
        assert_eq!(innovation_quantile(&[1.0, 2.0, 3.0], 0.99).unwrap(), 3.0);
        assert!(innovation_quantile(&[1.0], 0.0).is_err());
        assert!(innovation_quantile(&[1.0], 1.0).is_err());
        assert!(innovation_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn risk_mapping_only_for_tgarch() {
        let w = series(&[0.0, 0.0]);
        let err = conditional_var(
            ModelKind::Garch11,
            &ParamVector::garch11(0.1, 0.1, 0.8),
            &w,
            &TruncationSpec::full(),
            -1.64,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unsupported { .. }));
    }

    #[test]
    fn risk_mapping_is_linear_in_psi() {
        // zero window: ψ = ω/(1−β) = 1
        let theta = ParamVector::tgarch11(0.4, 0.1, 0.1, 0.6);
        let w = series(&[0.0; 5]);
        let t = TruncationSpec::full();
        let var = conditional_var(ModelKind::Tgarch11, &theta, &w, &t, -1.6449).unwrap();
        assert!((var - 1.6449).abs() < 1e-12);
        assert_eq!(conditional_var(ModelKind::Tgarch11, &theta, &w, &t, 0.0).unwrap(), 0.0);
        assert_eq!(conditional_es(ModelKind::Tgarch11, &theta, &w, &t, 0.0).unwrap(), 0.0);
        let w2 = series(&[1.5, -0.7, 2.2]);
        let v = evaluate_prediction(ModelKind::Tgarch11, &theta, &w2, &t).unwrap().value;
        let var2 = conditional_var(ModelKind::Tgarch11, &theta, &w2, &t, -2.0).unwrap();
        assert_eq!(var2, 2.0 * v);
    }
}
