use nalgebra::DMatrix;
use predframe::estimate::{
    arma_wls_objective, estimate, estimate_ar1_ols, estimate_arma_wls, estimate_qml, gaussian_nll,
};
use predframe::model::{simulate, InnovationSpec, ModelKind, ParamVector, Series};
use predframe::optim::OptimizerConfig;
use proptest::prelude::*;

fn sim(kind: ModelKind, theta: &ParamVector, t: usize, seed: u64) -> Series {
    simulate(kind, theta, &InnovationSpec::std_normal(), t, 500, seed).unwrap()
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    m == &m.transpose() && m.clone().symmetric_eigen().eigenvalues.iter().all(|&l| l >= -1e-10)
}

/// Root of the least-squares normal equation found by bisection.
fn ols_by_bisection(x: &[f64]) -> f64 {
    let score = |b: f64| x.windows(2).map(|w| w[0] * (w[1] - b * w[0])).sum::<f64>();
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn ols_matches_normal_equation_root() {
    for seed in 0..5 {
        let x = sim(ModelKind::Ar1, &ParamVector::ar1(0.6), 300, seed);
        let r = estimate_ar1_ols(&x).unwrap();
        assert!((r.theta_hat[0] - ols_by_bisection(x.values())).abs() < 1e-10);
        assert!(!r.clamped);
    }
}

#[test]
fn qml_score_vanishes_at_interior_optimum() {
    for (kind, theta) in [
        (ModelKind::Garch11, ParamVector::garch11(0.1, 0.1, 0.8)),
        (ModelKind::Tgarch11, ParamVector::tgarch11(0.2, 0.1, 0.15, 0.7)),
    ] {
        let x = sim(kind, &theta, 3000, 21);
        let r = estimate_qml(kind, &x, &OptimizerConfig::default()).unwrap();
        assert!(r.converged && !r.clamped, "{kind}: {r:?}");
        let n = x.len() as f64;
        for k in 0..kind.dim() {
            let h = 1e-6;
            let mut up = r.theta_hat.clone().into_vec();
            let mut dn = up.clone();
            up[k] += h;
            dn[k] -= h;
            let fu = gaussian_nll(kind, &ParamVector::new(up), &x).unwrap();
            let fd = gaussian_nll(kind, &ParamVector::new(dn), &x).unwrap();
            let score = (fu - fd) / (2.0 * h) / n;
            assert!(score.abs() < 1e-3, "{kind} coordinate {k}: mean score {score}");
        }
        assert!(r.objective <= gaussian_nll(kind, &theta, &x).unwrap() + 1e-9);
    }
}

#[test]
fn arma_objective_not_worse_than_truth() {
    let theta = ParamVector::arma11(1.0, 0.4, 0.5);
    for seed in 0..3 {
        let x = sim(ModelKind::Arma11, &theta, 800, seed);
        let r = estimate_arma_wls(&x, &OptimizerConfig::default()).unwrap();
        let at_hat = arma_wls_objective(&r.theta_hat, &x).unwrap();
        let at_truth = arma_wls_objective(&theta, &x).unwrap();
        assert!(at_hat <= at_truth * (1.0 + 1e-10), "{at_hat} > {at_truth}");
    }
}

#[test]
fn covariance_estimates_are_symmetric_psd() {
    let cases = [
        (ModelKind::Ar1, ParamVector::ar1(0.5)),
        (ModelKind::Arma11, ParamVector::arma11(1.0, 0.4, 0.5)),
        (ModelKind::Garch11, ParamVector::garch11(0.1, 0.1, 0.8)),
        (ModelKind::Tgarch11, ParamVector::tgarch11(0.2, 0.1, 0.15, 0.7)),
    ];
    for (i, (kind, theta)) in cases.into_iter().enumerate() {
        let x = sim(kind, &theta, 1500, 100 + i as u64);
        let r = estimate(kind, &x, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.upsilon_hat.shape(), (kind.dim(), kind.dim()));
        assert!(is_psd(&r.upsilon_hat), "{kind}: {}", r.upsilon_hat);
    }
}

#[test]
fn volatility_estimators_reject_short_series() {
    let x = sim(ModelKind::Garch11, &ParamVector::garch11(0.1, 0.1, 0.8), 20, 1);
    assert!(estimate_qml(ModelKind::Garch11, &x, &OptimizerConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ols_estimate_stays_in_box(beta in -0.99f64..0.99, seed in 0u64..10_000) {
        let x = sim(ModelKind::Ar1, &ParamVector::ar1(beta), 30, seed);
        let r = estimate_ar1_ols(&x).unwrap();
        prop_assert!(r.theta_hat[0].abs() <= 1.0 - 1e-6);
        prop_assert!(r.upsilon_hat[(0, 0)] >= 0.0);
    }

    #[test]
    fn ols_scale_invariant(scale in 0.01f64..100.0, seed in 0u64..10_000) {
        let x = sim(ModelKind::Ar1, &ParamVector::ar1(0.3), 50, seed);
        let y = Series::new(x.values().iter().map(|v| v * scale).collect()).unwrap();
        let a = estimate_ar1_ols(&x).unwrap().theta_hat[0];
        let b = estimate_ar1_ols(&y).unwrap().theta_hat[0];
        prop_assert!((a - b).abs() < 1e-12);
    }
}
