use predframe::model::{stationarity_margin, validate_params, InnovationSpec, ModelKind, ParamVector};

/// E[ln(a z² + b)] for z ~ N(0,1) by composite Simpson on [-12, 12].
fn quadrature(a: f64, b: f64) -> f64 {
    let n = 200_000;
    let (lo, hi) = (-12.0f64, 12.0f64);
    let h = (hi - lo) / n as f64;
    let f = |z: f64| (a * z * z + b).ln() * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn garch_margin_matches_quadrature() {
    let theta = ParamVector::garch11(0.1, 0.1, 0.85);
    let m = stationarity_margin(ModelKind::Garch11, &theta, &InnovationSpec::std_normal(), 1_000_000, 3).unwrap();
    let oracle = quadrature(0.1, 0.85);
    assert!((m.value - oracle).abs() < 5e-4, "{} vs {oracle}", m.value);
    assert!(m.is_stationary());
}

#[test]
fn explosive_point_has_positive_margin() {
    let theta = ParamVector::garch11(0.1, 3.0, 0.9);
    let m = stationarity_margin(ModelKind::Garch11, &theta, &InnovationSpec::std_normal(), 100_000, 3).unwrap();
    assert!(m.value > 0.0 && !m.is_stationary());
    assert!(quadrature(3.0, 0.9) > 0.0);
    // the log-moment condition is separate from membership in the parameter box
    assert!(validate_params(ModelKind::Garch11, &theta).unwrap().is_ok());
}

#[test]
fn tgarch_margin_matches_half_normal_quadrature() {
    // ε⁺ and ε⁻ are each |z| on half the mass
    let theta = ParamVector::tgarch11(0.1, 0.1, 0.2, 0.8);
    let m = stationarity_margin(ModelKind::Tgarch11, &theta, &InnovationSpec::std_normal(), 1_000_000, 5).unwrap();
    let n = 200_000;
    let h = 12.0 / n as f64;
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| ((0.1 * z + 0.8).ln() + (0.2 * z + 0.8).ln()) * phi(z);
    let mut s = f(0.0) + f(12.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let oracle = s * h / 3.0;
    assert!((m.value - oracle).abs() < 5e-4, "{} vs {oracle}", m.value);
}

#[test]
fn margin_rejects_non_volatility_models() {
    assert!(stationarity_margin(ModelKind::Ar1, &ParamVector::ar1(0.5), &InnovationSpec::std_normal(), 10_000, 1).is_err());
}
