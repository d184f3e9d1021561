use predframe::interval::{
    ci_naive_plugin, ci_sample_split, ci_two_process, make_split_plan, Scheme,
};
use predframe::model::{simulate, InnovationSpec, ModelKind, ParamVector, Series};
use predframe::predict::TruncationSpec;
use proptest::prelude::*;

fn sim(kind: ModelKind, theta: &ParamVector, t: usize, seed: u64) -> Series {
    simulate(kind, theta, &InnovationSpec::std_normal(), t, 500, seed).unwrap()
}

#[test]
fn split_bookkeeping() {
    let p = make_split_plan(1000, 0.5, 0.8).unwrap();
    assert_eq!((p.t_e, p.t_p), (749, 969));
    assert_eq!(p.m_te, 749f64.sqrt());
    assert_eq!(p.l_t, 1000f64.ln());
    assert!(matches!(
        make_split_plan(1000, 0.5, 0.5001),
        Err(predframe::Error::InfeasibleSplit { t_e: 969, t_p: 969, .. })
    ));
    assert!(make_split_plan(7, 0.5, 0.8).is_err());
    assert!(make_split_plan(1000, 0.8, 0.5).is_err());
}

#[test]
fn split_center_equals_two_process_on_explicit_windows() {
    let theta = ParamVector::garch11(0.1, 0.1, 0.8);
    let x = sim(ModelKind::Garch11, &theta, 1500, 12);
    let plan = make_split_plan(1500, 0.5, 0.8).unwrap();
    let spl = ci_sample_split(ModelKind::Garch11, &x, &plan, 0.9).unwrap();
    let est = x.slice(1, plan.t_e).unwrap();
    let tip = ci_two_process(ModelKind::Garch11, &est, &x, &TruncationSpec::from_t1(plan.t_p), 0.9).unwrap();
    assert_eq!(spl.center, tip.center);
    assert_eq!(spl.v_hat, tip.v_hat);
    assert_eq!(spl.scheme, Scheme::SampleSplit);
    assert_eq!(tip.scheme, Scheme::TwoProcess);
    assert_eq!(spl.scale, (plan.t_e as f64).sqrt());
    assert_eq!(tip.scale, (plan.t_e as f64).sqrt());
}

#[test]
fn ar1_variance_is_closed_form() {
    let theta = ParamVector::ar1(0.6);
    let y = sim(ModelKind::Ar1, &theta, 400, 1);
    let x = sim(ModelKind::Ar1, &theta, 50, 2);
    let ci = ci_two_process(ModelKind::Ar1, &y, &x, &TruncationSpec::full(), 0.95).unwrap();
    let num: f64 = y.values().windows(2).map(|w| w[0] * w[1]).sum();
    let den: f64 = y.values()[..399].iter().map(|v| v * v).sum();
    let b = num / den;
    let xt = x.last();
    assert!((ci.center - b * xt).abs() < 1e-14);
    assert!((ci.v_hat.powi(2) - xt * xt * (1.0 - b * b)).abs() < 1e-12);
    let half = 1.959963984540054 * ci.v_hat / 20.0;
    assert!((ci.half_width - half).abs() < 1e-12);
}

#[test]
fn zero_gradient_gives_degenerate_interval() {
    let y = sim(ModelKind::Ar1, &ParamVector::ar1(0.6), 100, 5);
    let x = Series::new(vec![1.0, 0.0]).unwrap();
    let ci = ci_two_process(ModelKind::Ar1, &y, &x, &TruncationSpec::full(), 0.9).unwrap();
    assert_eq!(ci.v_hat, 0.0);
    assert_eq!(ci.half_width, 0.0);
    assert!(ci.contains(0.0));
}

#[test]
fn naive_uses_full_sample_scale() {
    let x = sim(ModelKind::Arma11, &ParamVector::arma11(1.0, 0.4, 0.5), 600, 8);
    let ci = ci_naive_plugin(ModelKind::Arma11, &x, &TruncationSpec::full(), 0.9).unwrap();
    assert_eq!(ci.scale, 600f64.sqrt());
    assert!(ci.lower() <= ci.center && ci.center <= ci.upper());
}

#[test]
fn invalid_level_rejected() {
    let x = sim(ModelKind::Ar1, &ParamVector::ar1(0.5), 100, 1);
    for level in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(ci_naive_plugin(ModelKind::Ar1, &x, &TruncationSpec::full(), level).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn plan_is_ordered(t in 8usize..200_000, a in 0.05f64..0.6, gap in 0.05f64..0.35) {
        let b = a + gap;
        prop_assume!(b < 0.99);
        if let Ok(p) = make_split_plan(t, a, b) {
            prop_assert!(1 < p.t_e && p.t_e < p.t_p && p.t_p <= t);
            prop_assert!(p.window_ratio() >= 0.0);
        }
    }

    #[test]
    fn width_grows_with_level(l1 in 0.5f64..0.98, dl in 0.001f64..0.01, seed in 0u64..500) {
        let x = sim(ModelKind::Ar1, &ParamVector::ar1(0.5), 80, seed);
        let a = ci_naive_plugin(ModelKind::Ar1, &x, &TruncationSpec::full(), l1).unwrap();
        let b = ci_naive_plugin(ModelKind::Ar1, &x, &TruncationSpec::full(), l1 + dl).unwrap();
        prop_assert!(b.half_width >= a.half_width);
        prop_assert!(a.half_width >= 0.0);
    }
}
