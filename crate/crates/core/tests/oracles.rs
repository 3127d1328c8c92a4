use minmax_lab::{
    appendix_f, appendix_fprime, appendix_table, crosscheck_risk, error_law, risk, scale_loss,
    DerivativeMode, EstimatorSpec, GaussianLocationModel, LossSpec, McSettings, RiskMethod,
    SlopeSignSummary,
};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn abs_moment(q: f64) -> f64 {
    2f64.powf(q / 2.0) * gamma((q + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

#[test]
fn absolute_moments_match_gamma_formula() {
    let model = GaussianLocationModel::new(1, 1.0).unwrap();
    for q in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
        let r = risk(&model, &EstimatorSpec::affine(1.0, 0.0), &LossSpec::canonical(q), 0.7, RiskMethod::quadrature())
            .unwrap();
        let exact = abs_moment(q);
        assert!((r.value / exact - 1.0).abs() < 1e-8, "q={q}: {} vs {exact}", r.value);
    }
}

#[test]
fn sample_mean_risk_is_flat() {
    for n in [1, 4, 25] {
        let model = GaussianLocationModel::new(n, 1.0).unwrap();
        for i in 0..=20 {
            let theta = -5.0 + 0.5 * i as f64;
            let r = risk(&model, &EstimatorSpec::affine(1.0, 0.0), &LossSpec::canonical(2.0), theta, RiskMethod::quadrature())
                .unwrap();
            assert!((r.value - 1.0 / n as f64).abs() < 1e-10);
        }
    }
}

#[test]
fn median_risk_matches_asymptotic_variance() {
    let model = GaussianLocationModel::new(101, 1.0).unwrap();
    let law = error_law(&model, &EstimatorSpec::median(0.0), 0.0, McSettings::new(20_000, 5)).unwrap();
    let minmax_lab::ErrorLaw::Empirical { samples: errs, .. } = law else {
        panic!("median law should be empirical")
    };
    let mse = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
    let target = std::f64::consts::PI / 202.0;
    assert!((mse / target - 1.0).abs() < 0.1, "{mse} vs {target}");
}

#[test]
fn appendix_invariants() {
    for q in [1.5, 2.0, 2.2, 3.0] {
        for n in [1, 4] {
            let f0 = appendix_fprime(0.0, n, q, DerivativeMode::Analytic).unwrap();
            assert!(f0.abs() < 1e-8, "q={q}: f'(0) = {f0}");
            for i in 1..=10 {
                let a = 0.1 * i as f64;
                let (fp, fm) = (appendix_f(a, n, q).unwrap(), appendix_f(-a, n, q).unwrap());
                assert!((fp - fm).abs() < 1e-8);
                let an = appendix_fprime(a, n, q, DerivativeMode::Analytic).unwrap();
                let fd = appendix_fprime(a, n, q, DerivativeMode::FiniteDifference).unwrap();
                assert!((an - fd).abs() < 1e-5, "q={q} a={a}: {an} vs {fd}");
                // Convexity of f along the grid.
                let mid = appendix_f(a, n, q).unwrap();
                let (l, r) = (appendix_f(a - 0.05, n, q).unwrap(), appendix_f(a + 0.05, n, q).unwrap());
                assert!(l + r - 2.0 * mid >= -1e-12);
            }
        }
    }
}

#[test]
fn quadratic_appendix_is_closed_form() {
    let alphas: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
    let rows = appendix_table(&alphas, 1, 2.0).unwrap();
    for r in &rows {
        assert!((r.f - (1.0 + r.alpha * r.alpha)).abs() < 1e-10);
        assert!((r.fprime_analytic - 2.0 * r.alpha).abs() < 1e-6);
    }
    let summary = SlopeSignSummary::from_rows(&rows);
    assert_eq!(summary.positive_alphas, 10);
    assert_eq!(summary.positive_slopes, 10);
    assert!(!summary.decreasing_claim_holds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_agrees_with_simulation(
        gamma in 0.2f64..1.5,
        beta in -1.0f64..1.0,
        p in 1.0f64..4.0,
        theta in -3.0f64..3.0,
        n in 1usize..10,
        seed in any::<u64>(),
    ) {
        let model = GaussianLocationModel::new(n, 1.0).unwrap();
        let c = crosscheck_risk(&model, &EstimatorSpec::affine(gamma, beta), &LossSpec::canonical(p), theta, 100_000, seed)
            .unwrap();
        prop_assert!(c.z_score < 4.0, "z = {}", c.z_score);
    }

    #[test]
    fn risk_scales_with_the_loss(
        gamma in 0.0f64..1.5,
        beta in -1.0f64..1.0,
        p in 1.0f64..4.0,
        lambda in 0.01f64..100.0,
        theta in -5.0f64..5.0,
    ) {
        let model = GaussianLocationModel::new(3, 2.0).unwrap();
        let est = EstimatorSpec::affine(gamma, beta);
        let l = LossSpec::canonical(p);
        let a = risk(&model, &est, &l, theta, RiskMethod::quadrature()).unwrap().value;
        let b = risk(&model, &est, &scale_loss(&l, lambda).unwrap(), theta, RiskMethod::quadrature()).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert!((b - lambda * a).abs() <= 1e-10 * (1.0 + lambda * a));
    }

    #[test]
    fn sum_of_losses_has_additive_risk(
        gamma in 0.0f64..1.5,
        p in 1.0f64..4.0,
        q in 1.0f64..4.0,
        theta in -3.0f64..3.0,
    ) {
        let model = GaussianLocationModel::new(2, 1.0).unwrap();
        let est = EstimatorSpec::affine(gamma, 0.2);
        let (lp, lq) = (LossSpec::canonical(p), LossSpec::canonical(q));
        let sum = LossSpec::sum(vec![lp.clone(), lq.clone()]);
        let r = |l: &LossSpec| risk(&model, &est, l, theta, RiskMethod::quadrature()).unwrap().value;
        let (a, b, s) = (r(&lp), r(&lq), r(&sum));
        prop_assert!((s - a - b).abs() <= 1e-10 * s.max(1.0));
    }
}
