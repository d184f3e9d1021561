//! Split plans and delta-method confidence intervals for ψ_{T+1}.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate, EstimationResult};
use crate::model::{ModelKind, Series};
use crate::optim::OptimizerConfig;
use crate::predict::{evaluate_prediction, TruncationSpec};
use crate::stats::two_sided_z;

pub const DEFAULT_A_EXP: f64 = 0.5;
pub const DEFAULT_B_EXP: f64 = 0.8;

/// Estimation sample 1..=T_E and prediction window T_P..=T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    #[serde(rename = "T")]
    pub t: usize,
    pub a_exp: f64,
    pub b_exp: f64,
    #[serde(rename = "T_E")]
    pub t_e: usize,
    #[serde(rename = "T_P")]
    pub t_p: usize,
    pub m_te: f64,
    pub l_t: f64,
}

impl SplitPlan {
    /// (T − T_P) / log T; large values indicate the truncation is harmless.
    pub fn window_ratio(&self) -> f64 {
        (self.t - self.t_p) as f64 / self.l_t
    }
}

/// ⌊T^x⌋, snapping to the nearest integer when T^x is within rounding
/// error of it (e.g. 100^0.5).
fn floor_pow(t: usize, x: f64) -> i64 {
    let v = (t as f64).powf(x);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as i64
    } else {
        v.floor() as i64
    }
}

pub fn make_split_plan(t: usize, a_exp: f64, b_exp: f64) -> Result<SplitPlan> {
    if t < 8 {
        return Err(Error::structural(format!("split plan needs T >= 8, got {t}")));
    }
    if !(a_exp > 0.0 && a_exp < b_exp && b_exp < 1.0) {
        return Err(Error::structural(format!(
            "split exponents must satisfy 0 < a < b < 1, got a={a_exp}, b={b_exp}"
        )));
    }
    let t_e = t as i64 - floor_pow(t, b_exp);
    let t_p = t as i64 - floor_pow(t, a_exp);
    if !(1 < t_e && t_e < t_p && t_p <= t as i64) {
        return Err(Error::InfeasibleSplit { t, t_e, t_p });
    }
    Ok(SplitPlan {
        t,
        a_exp,
        b_exp,
        t_e: t_e as usize,
        t_p: t_p as usize,
        m_te: (t_e as f64).sqrt(),
        l_t: (t as f64).ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "2ip")]
    TwoProcess,
    #[serde(rename = "spl")]
    SampleSplit,
    #[serde(rename = "naive")]
    NaivePlugin,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TwoProcess => "2ip",
            Scheme::SampleSplit => "spl",
            Scheme::NaivePlugin => "naive",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2ip" | "two-process" | "twoprocess" => Ok(Scheme::TwoProcess),
            "spl" | "sample-split" | "samplesplit" => Ok(Scheme::SampleSplit),
            "naive" | "plugin" | "naive-plugin" => Ok(Scheme::NaivePlugin),
            other => Err(Error::structural(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub level: f64,
    pub scheme: Scheme,
    /// Delta-method standard deviation √(∇ψ′Υ̂∇ψ).
    pub v_hat: f64,
    /// √T for the two-process and plug-in schemes, √T_E for sample split.
    pub scale: f64,
    /// The underlying estimate sat on the parameter boundary.
    pub clamped: bool,
    pub warnings: Vec<String>,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }

    /// The same interval at another confidence level.
    pub fn at_level(&self, level: f64) -> Result<Self> {
        let z = two_sided_z(level)?;
        Ok(ConfidenceInterval {
            level,
            half_width: z * self.v_hat / self.scale,
            ..self.clone()
        })
    }
}

/// Builds ψ̂ ± z·v̂/scale from an estimate and a prediction window.
pub fn interval_from_estimate(
    est: &EstimationResult,
    pred_window: &Series,
    trunc: &TruncationSpec,
    level: f64,
    scale: f64,
    scheme: Scheme,
) -> Result<ConfidenceInterval> {
    let z = two_sided_z(level)?;
    let eval = evaluate_prediction(est.kind, &est.theta_hat, pred_window, trunc)?;
    let g = &eval.gradient;
    let var = (g.transpose() * &est.upsilon_hat * g)[(0, 0)];
    let v_hat = var.max(0.0).sqrt();
    Ok(ConfidenceInterval {
        center: eval.value,
        half_width: z * v_hat / scale,
        level,
        scheme,
        v_hat,
        scale,
        clamped: est.clamped,
        warnings: est.warnings.clone(),
    })
}

/// Two-process interval: θ̂ from `est_series`, ψ̂ from `pred_series`.
pub fn ci_two_process(
    kind: ModelKind,
    est_series: &Series,
    pred_series: &Series,
    trunc: &TruncationSpec,
    level: f64,
) -> Result<ConfidenceInterval> {
    ci_two_process_with(kind, est_series, pred_series, trunc, level, &OptimizerConfig::default())
}

pub fn ci_two_process_with(
    kind: ModelKind,
    est_series: &Series,
    pred_series: &Series,
    trunc: &TruncationSpec,
    level: f64,
    cfg: &OptimizerConfig,
) -> Result<ConfidenceInterval> {
    two_sided_z(level)?;
    let est = estimate(kind, est_series, cfg)?;
    let scale = (est_series.len() as f64).sqrt();
    interval_from_estimate(&est, pred_series, trunc, level, scale, Scheme::TwoProcess)
}

/// Sample-split interval: θ̂ from X_{1:T_E}, ψ̂ from X_{T_P:T}.
pub fn ci_sample_split(
    kind: ModelKind,
    series: &Series,
    plan: &SplitPlan,
    level: f64,
) -> Result<ConfidenceInterval> {
    ci_sample_split_with(kind, series, plan, level, &OptimizerConfig::default())
}

pub fn ci_sample_split_with(
    kind: ModelKind,
    series: &Series,
    plan: &SplitPlan,
    level: f64,
    cfg: &OptimizerConfig,
) -> Result<ConfidenceInterval> {
    if plan.t != series.len() {
        return Err(Error::structural(format!(
            "split plan is for T={} but the series has {} observations",
            plan.t,
            series.len()
        )));
    }
    two_sided_z(level)?;
    let est = estimate(kind, &series.slice(1, plan.t_e)?, cfg)?;
    interval_from_estimate(
        &est,
        series,
        &TruncationSpec::from_t1(plan.t_p),
        level,
        plan.m_te,
        Scheme::SampleSplit,
    )
}

/// Plug-in interval that reuses the full series for both steps.
pub fn ci_naive_plugin(
    kind: ModelKind,
    series: &Series,
    trunc: &TruncationSpec,
    level: f64,
) -> Result<ConfidenceInterval> {
    ci_naive_plugin_with(kind, series, trunc, level, &OptimizerConfig::default())
}

pub fn ci_naive_plugin_with(
    kind: ModelKind,
    series: &Series,
    trunc: &TruncationSpec,
    level: f64,
    cfg: &OptimizerConfig,
) -> Result<ConfidenceInterval> {
    two_sided_z(level)?;
    let est = estimate(kind, series, cfg)?;
    let scale = (series.len() as f64).sqrt();
    interval_from_estimate(&est, series, trunc, level, scale, Scheme::NaivePlugin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> Series {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn split_plan_example() {
        let p = make_split_plan(1000, 0.5, 0.8).unwrap();
        assert_eq!((p.t_e, p.t_p), (749, 969));
        assert!((p.m_te - 749f64.sqrt()).abs() < 1e-15);
        assert!((p.l_t - 1000f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn split_plan_infeasible() {
        assert!(matches!(
            make_split_plan(10, 0.5, 0.99),
            Err(Error::InfeasibleSplit { .. })
        ));
        // ⌊1000^0.5001⌋ = ⌊1000^0.5⌋ = 31, so T_E = T_P
        assert!(matches!(
            make_split_plan(1000, 0.5, 0.5001),
            Err(Error::InfeasibleSplit { t_e: 969, t_p: 969, .. })
        ));
        assert!(make_split_plan(1000, 0.8, 0.5).is_err());
        assert!(make_split_plan(7, 0.2, 0.5).is_err());
    }

    #[test]
    fn exact_powers_are_not_floored_down() {
        let p = make_split_plan(100, 0.5, 0.9).unwrap();
        assert_eq!(p.t_p, 90);
    }

    #[test]
    fn two_process_ar1_example() {
        let est = series(&[1.0, 0.5, 0.25]);
        let pred = series(&[3.0, 2.0]);
        let ci = ci_two_process(ModelKind::Ar1, &est, &pred, &TruncationSpec::full(), 0.95).unwrap();
        assert_eq!(ci.center, 1.0);
        assert!((ci.v_hat - 3f64.sqrt()).abs() < 1e-15);
        let expected = 1.959963984540054 * 3f64.sqrt() / 3f64.sqrt();
        assert!((ci.half_width - expected).abs() < 1e-9);
        assert!(ci.lower() <= ci.upper());
    }

    #[test]
    fn zero_gradient_gives_degenerate_interval() {
        let est = series(&[1.0, 0.5, 0.25]);
        let pred = series(&[3.0, 0.0]);
        let ci = ci_two_process(ModelKind::Ar1, &est, &pred, &TruncationSpec::full(), 0.95).unwrap();
        assert_eq!((ci.center, ci.v_hat, ci.half_width), (0.0, 0.0, 0.0));
    }

    #[test]
    fn naive_center() {
        let s = series(&[1.0, 0.5, 0.25]);
        let ci = ci_naive_plugin(ModelKind::Ar1, &s, &TruncationSpec::full(), 0.9).unwrap();
        assert_eq!(ci.center, 0.125);
        let again = ci_naive_plugin(ModelKind::Ar1, &s, &TruncationSpec::full(), 0.9).unwrap();
        assert_eq!(ci, again);
    }

    #[test]
    fn width_monotone_in_level() {
        let s = series(&[1.0, 0.5, 0.25, -0.3, 0.2]);
        let mut prev = f64::INFINITY;
        for level in [0.99, 0.95, 0.9, 0.5, 0.1, 0.01] {
            let ci = ci_naive_plugin(ModelKind::Ar1, &s, &TruncationSpec::full(), level).unwrap();
            assert!(ci.half_width < prev);
            prev = ci.half_width;
        }
    }

    #[test]
    fn at_level_matches_rebuild() {
        let s = series(&[1.0, 0.5, 0.25, -0.3, 0.2]);
        let a = ci_naive_plugin(ModelKind::Ar1, &s, &TruncationSpec::full(), 0.9).unwrap();
        let b = ci_naive_plugin(ModelKind::Ar1, &s, &TruncationSpec::full(), 0.8).unwrap();
        assert_eq!(a.at_level(0.8).unwrap(), b);
    }
}
