//! Invariants over randomly generated problems.

use doubleshrink::estimator::{bona_fide_loss, eta_of, optimal_psi_hat, LossQuadratic};
use doubleshrink::portfolio::{
    combine_weights, ridge_blend, sample_covariance, tikhonov_weights, traditional_gmv,
};
use doubleshrink::rmt::kernels_from_sample;
use doubleshrink::simulate::{gen_t5, random_covariance, TrueModel};
use doubleshrink::targets::{equal_correlation_target, equally_weighted, fit_strategy};
use doubleshrink::{
    Covariance, FitOptions, Panel, Problem, Strategy, StrategyKind, Target, Weights,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn panel(p: usize, n: usize, seed: u64) -> (Covariance, Panel) {
    let sigma = random_covariance(p, seed);
    let model = TrueModel::iid(DVector::zeros(p), sigma.clone()).unwrap();
    (sigma, gen_t5(&model, n, seed ^ 0xABCD).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_strategy_returns_budget_weights(p in 3usize..25, ratio in 0.3f64..2.5, seed in any::<u64>()) {
        let n = ((p as f64 / ratio).round() as usize).max(4);
        let (_, y) = panel(p, n, seed);
        for kind in [StrategyKind::Traditional, StrategyKind::Target, StrategyKind::Double] {
            for target in [Target::EquallyWeighted, Target::EqualCorrelation] {
                let fit = fit_strategy(&Strategy::new(kind, target), &y, &FitOptions::default()).unwrap();
                prop_assert!((fit.weights.as_vector().sum() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn psi_hat_matches_loss_formula(p in 3usize..20, seed in any::<u64>(), lambda in 0.05f64..0.95) {
        let (_, y) = panel(p, 3 * p, seed);
        let s = sample_covariance(&y);
        let b: Weights = equally_weighted(p);
        let c = y.concentration();
        let bf = Problem::new(s.clone(), b.clone(), c).unwrap().evaluate(lambda).unwrap();
        // Cholesky route versus the spectral route used by `Problem`.
        let s_lambda = ridge_blend(&s, lambda).unwrap();
        let k = kernels_from_sample(&s, eta_of(lambda), c).unwrap();
        let loss = bona_fide_loss(&s, &s_lambda, &b, &k, lambda).unwrap();
        let psi = optimal_psi_hat(&s, &s_lambda, &b, &k, lambda).unwrap();
        prop_assert!((bf.loss - loss).abs() <= 1e-9 * loss.abs().max(1.0));
        prop_assert!((bf.psi - psi).abs() <= 1e-9 * psi.abs().max(1.0));
        // L̂ = ψ̂(1 − â)
        prop_assert!((bf.loss - bf.psi * (1.0 - bf.a)).abs() <= 1e-10 * bf.loss.abs().max(1.0));
    }

    #[test]
    fn true_minimizer_beats_neighbours(p in 3usize..20, seed in any::<u64>(), lambda in 0.05f64..0.95, h in 0.01f64..0.5) {
        let (sigma, y) = panel(p, 2 * p + 3, seed);
        let s = sample_covariance(&y);
        let b: Weights = equally_weighted(p);
        let w = tikhonov_weights(&ridge_blend(&s, lambda).unwrap()).unwrap();
        let q = LossQuadratic::new(&sigma, &w, &b);
        let psi = q.optimal_psi().unwrap();
        let at = |x: f64| combine_weights(&w, &b, x).variance(sigma.matrix());
        prop_assert!(at(psi) <= at(psi + h) + 1e-14);
        prop_assert!(at(psi) <= at(psi - h) + 1e-14);
    }

    #[test]
    fn ec_target_is_a_budget_portfolio(p in 2usize..30, seed in any::<u64>()) {
        let (_, y) = panel(p, p + 5, seed);
        let b = equal_correlation_target(&sample_covariance(&y)).unwrap();
        prop_assert!((b.as_vector().sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn f32_agrees_with_f64(p in 3usize..12, seed in any::<u64>(), lambda in 0.1f64..0.9) {
        let (_, y) = panel(p, 3 * p, seed);
        let s64 = sample_covariance(&y);
        let s32 = doubleshrink::CovarianceEstimate::<f32>::sample(s64.matrix().map(|x| x as f32)).unwrap();
        let c = y.concentration();
        let bf64 = Problem::new(s64, equally_weighted(p), c).unwrap().evaluate(lambda).unwrap();
        // 1 − 2â + ŷ cancels when the ridge portfolio nearly equals the target.
        prop_assume!(bf64.denominator > 1e-2);
        let l64 = bf64.loss;
        let l32 = doubleshrink::ShrinkageProblem::new(s32, equally_weighted::<f32>(p), c as f32)
            .unwrap()
            .evaluate(lambda as f32)
            .unwrap()
            .loss;
        prop_assert!((l64 - l32 as f64).abs() < 1e-3 * l64.abs().max(1e-2), "f64 {l64} f32 {l32}");
    }
}

#[test]
fn ridge_at_one_is_traditional_on_wide_sample_too() {
    // For c < 1 both are the plain inverse; for c > 1 λ = 1 is outside the
    // ridge domain only through the η = 0 kernel, not the weights.
    let (_, y) = panel(8, 40, 5);
    let s = sample_covariance(&y);
    let w = tikhonov_weights(&ridge_blend(&s, 1.0).unwrap()).unwrap();
    let t = traditional_gmv(&s).unwrap();
    assert!((w.as_vector() - t.as_vector()).amax() < 1e-10);
}
