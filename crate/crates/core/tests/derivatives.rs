use predframe::model::{simulate, InnovationSpec, ModelKind, ParamVector, Series};
use predframe::predict::{evaluate_prediction, prediction_gap, TruncationSpec};
use predframe::verify::gradient_check;
use proptest::prelude::*;

fn window(kind: ModelKind, theta: &ParamVector, t: usize, seed: u64) -> Series {
    simulate(kind, theta, &InnovationSpec::std_normal(), t, 500, seed).unwrap()
}

fn points() -> Vec<(ModelKind, ParamVector)> {
    vec![
        (ModelKind::Ar1, ParamVector::ar1(-0.7)),
        (ModelKind::Ar1, ParamVector::ar1(0.95)),
        (ModelKind::Arma11, ParamVector::arma11(1.0, 0.4, 0.5)),
        (ModelKind::Arma11, ParamVector::arma11(-0.5, -0.6, 0.3)),
        (ModelKind::Garch11, ParamVector::garch11(0.1, 0.1, 0.8)),
        (ModelKind::Garch11, ParamVector::garch11(0.5, 0.05, 0.6)),
        (ModelKind::Tgarch11, ParamVector::tgarch11(0.2, 0.1, 0.15, 0.7)),
        (ModelKind::Tgarch11, ParamVector::tgarch11(0.05, 0.02, 0.2, 0.5)),
    ]
}

#[test]
fn finite_differences_agree() {
    for (i, (kind, theta)) in points().into_iter().enumerate() {
        let x = window(kind, &theta, 200, i as u64);
        let g = gradient_check(kind, &theta, &x, &TruncationSpec::full(), 1e-5).unwrap();
        assert!(g.gradient_err < 1e-6, "{kind} {theta:?}: {g:?}");
        assert!(g.hessian_err < 1e-4, "{kind} {theta:?}: {g:?}");
    }
}

#[test]
fn hessian_zero_pattern() {
    for (i, (kind, theta)) in points().into_iter().enumerate() {
        let x = window(kind, &theta, 100, 50 + i as u64);
        let h = evaluate_prediction(kind, &theta, &x, &TruncationSpec::full()).unwrap().hessian;
        let zeros: Vec<(usize, usize)> = match kind {
            ModelKind::Ar1 => vec![(0, 0)],
            ModelKind::Arma11 => vec![(0, 0), (2, 2)],
            ModelKind::Garch11 => vec![(0, 0), (0, 1), (1, 1)],
            ModelKind::Tgarch11 => vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)],
        };
        for (a, b) in zeros {
            assert_eq!(h[(a, b)], 0.0, "{kind} ({a},{b})");
            assert_eq!(h[(b, a)], 0.0, "{kind} ({b},{a})");
        }
    }
}

#[test]
fn ar1_is_linear() {
    let x = Series::new(vec![0.3, -1.2, 2.5]).unwrap();
    let e = evaluate_prediction(ModelKind::Ar1, &ParamVector::ar1(0.4), &x, &TruncationSpec::full()).unwrap();
    assert_eq!(e.value, 0.4 * 2.5);
    assert_eq!(e.gradient[0], 2.5);
}

#[test]
fn closed_form_tail_matches_zero_padding() {
    for (i, (kind, theta)) in points().into_iter().enumerate() {
        let x = window(kind, &theta, 60, 80 + i as u64);
        let mut padded = vec![0.0; 9 * x.len()];
        padded.extend_from_slice(x.values());
        let padded = Series::new(padded).unwrap();
        let short = evaluate_prediction(kind, &theta, &x, &TruncationSpec::full()).unwrap();
        let long = evaluate_prediction(kind, &theta, &padded, &TruncationSpec::full()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(short.value, long.value) < 1e-12, "{kind}: {} vs {}", short.value, long.value);
        for k in 0..kind.dim() {
            let (a, b) = (short.gradient[k], long.gradient[k]);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{kind} grad {k}: {a} vs {b}");
        }
    }
}

#[test]
fn gap_matches_remainder_sum() {
    let theta = ParamVector::tgarch11(0.2, 0.1, 0.15, 0.7);
    let x = window(ModelKind::Tgarch11, &theta, 120, 9);
    let t = x.len();
    for t1 in [2, 40, 100, 120] {
        let gap = prediction_gap(
            ModelKind::Tgarch11,
            &theta,
            &x,
            &TruncationSpec::full(),
            &TruncationSpec::from_t1(t1),
        )
        .unwrap();
        let sum: f64 = (1..t1)
            .map(|s| {
                let v = x.values()[s - 1];
                0.7f64.powi((t - s) as i32) * (0.1 * v.max(0.0) + 0.15 * (-v).max(0.0))
            })
            .sum();
        let oracle = (t as f64).sqrt() * sum;
        assert!((gap - oracle).abs() <= 1e-12 * oracle.max(1e-300), "t1={t1}: {gap} vs {oracle}");
    }
}

#[test]
fn gap_is_symmetric_and_zero_on_diagonal() {
    let theta = ParamVector::arma11(0.3, 0.5, 0.2);
    let x = window(ModelKind::Arma11, &theta, 50, 4);
    let a = TruncationSpec::from_t1(10);
    let b = TruncationSpec::from_t1(30);
    let ab = prediction_gap(ModelKind::Arma11, &theta, &x, &a, &b).unwrap();
    let ba = prediction_gap(ModelKind::Arma11, &theta, &x, &b, &a).unwrap();
    assert_eq!(ab, ba);
    assert_eq!(prediction_gap(ModelKind::Arma11, &theta, &x, &a, &a).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hessian_symmetric_and_finite(
        omega in 0.01f64..2.0,
        ap in 0.0f64..0.3,
        am in 0.01f64..0.3,
        beta in 0.0f64..0.95,
        seed in 0u64..1000,
    ) {
        let theta = ParamVector::tgarch11(omega, ap, am, beta);
        let x = window(ModelKind::Tgarch11, &ParamVector::tgarch11(0.1, 0.1, 0.1, 0.5), 80, seed);
        let e = evaluate_prediction(ModelKind::Tgarch11, &theta, &x, &TruncationSpec::full()).unwrap();
        prop_assert!(e.value.is_finite() && e.value > 0.0);
        prop_assert!(e.gradient.iter().all(|v| v.is_finite()));
        prop_assert_eq!(&e.hessian, &e.hessian.transpose());
    }

    #[test]
    fn garch_prediction_shrinks_with_truncation(
        alpha in 0.01f64..0.3,
        beta in 0.0f64..0.95,
        t1 in 1usize..60,
        seed in 0u64..1000,
    ) {
        let theta = ParamVector::garch11(0.2, alpha, beta);
        let x = window(ModelKind::Garch11, &theta, 60, seed);
        let full = evaluate_prediction(ModelKind::Garch11, &theta, &x, &TruncationSpec::full()).unwrap();
        let cut = evaluate_prediction(ModelKind::Garch11, &theta, &x, &TruncationSpec::from_t1(t1)).unwrap();
        prop_assert!(cut.value <= full.value);
        prop_assert!(cut.value >= 0.2 / (1.0 - beta) * (1.0 - 1e-12));
    }

    #[test]
    fn gap_bounded_by_both_evaluations(
        beta in -0.9f64..0.9,
        alpha in -0.9f64..0.9,
        t1 in 1usize..40,
        seed in 0u64..1000,
    ) {
        prop_assume!((alpha + beta).abs() > 0.05);
        let theta = ParamVector::arma11(0.5, alpha, beta);
        let x = window(ModelKind::Arma11, &theta, 40, seed);
        let gap = prediction_gap(ModelKind::Arma11, &theta, &x, &TruncationSpec::full(), &TruncationSpec::from_t1(t1)).unwrap();
        let full = evaluate_prediction(ModelKind::Arma11, &theta, &x, &TruncationSpec::full()).unwrap().value;
        let cut = evaluate_prediction(ModelKind::Arma11, &theta, &x, &TruncationSpec::from_t1(t1)).unwrap().value;
        let direct = (40f64).sqrt() * (full - cut).abs();
        prop_assert!((gap - direct).abs() <= 1e-9 * (1.0 + direct));
    }
}
