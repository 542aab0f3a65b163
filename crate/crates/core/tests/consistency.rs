//! Sample kernels and the bona fide loss against their population
//! counterparts on simulated data with known covariance.

use doubleshrink::estimator::{eta_of, finite_sample_l2};
use doubleshrink::linalg::SymSpectrum;
use doubleshrink::portfolio::{ridge_blend, sample_covariance};
use doubleshrink::rmt::{kernels_from_sample, oracle_functionals_from_eigenvalues};
use doubleshrink::simulate::{draw_model, gen_t5, Scenario};
use doubleshrink::targets::equally_weighted;
use doubleshrink::{FitOptions, OracleProblem, Problem, Weights};

fn setup(
    p: usize,
    n: usize,
    seed: u64,
) -> (doubleshrink::simulate::TrueModel, doubleshrink::Panel) {
    let model = draw_model(Scenario::T5, p, seed).unwrap();
    let panel = gen_t5(&model, n, seed + 1000).unwrap();
    (model, panel)
}

#[test]
fn v_hat_tracks_oracle_v() {
    for &(p, n) in &[(60, 120), (150, 300), (450, 300)] {
        let (model, panel) = setup(p, n, 17);
        let s = sample_covariance(&panel);
        let eig = SymSpectrum::new(model.sigma.matrix()).eigenvalues;
        let c = p as f64 / n as f64;
        for &lambda in &[0.2, 0.5, 0.8] {
            let eta = eta_of(lambda);
            let k = kernels_from_sample(&s, eta, c).unwrap();
            let o = oracle_functionals_from_eigenvalues(&eig, eta, c).unwrap();
            let rel = (k.v_hat - o.v).abs() / o.v;
            assert!(
                rel < 0.05,
                "p={p} n={n} lambda={lambda}: v_hat {} vs v {}",
                k.v_hat,
                o.v
            );
        }
    }
}

#[test]
fn three_loss_curves_agree_at_moderate_dimension() {
    let (model, panel) = setup(150, 300, 23);
    let s = sample_covariance(&panel);
    let b: Weights = equally_weighted(150);
    let c = panel.concentration();
    let bona = Problem::new(s.clone(), b.clone(), c).unwrap();
    let oracle = OracleProblem::new(&model.unconditional_sigma, &b, c).unwrap();
    for k in 1..10 {
        let lambda = k as f64 / 10.0;
        let l_hat = bona.evaluate(lambda).unwrap().loss;
        let l_two = oracle.evaluate(lambda).unwrap().loss;
        let l_n = finite_sample_l2(
            &model.unconditional_sigma,
            &ridge_blend(&s, lambda).unwrap(),
            &b,
        )
        .unwrap();
        assert!(
            (l_hat - l_two).abs() / l_two < 0.2,
            "lambda {lambda}: {l_hat} vs {l_two}"
        );
        assert!(
            (l_n - l_two).abs() / l_two < 0.2,
            "lambda {lambda}: {l_n} vs {l_two}"
        );
    }
}

#[test]
fn bona_fide_optimum_is_near_oracle_optimum() {
    let (model, panel) = setup(150, 300, 29);
    let s = sample_covariance(&panel);
    let b: Weights = equally_weighted(150);
    let c = panel.concentration();
    let sol = Problem::new(s, b.clone(), c)
        .unwrap()
        .optimize(&FitOptions::default())
        .unwrap();
    let oracle = OracleProblem::new(&model.unconditional_sigma, &b, c).unwrap();
    let at_best = (1..99)
        .map(|k| oracle.evaluate(k as f64 / 100.0).unwrap().loss)
        .fold(f64::MIN, f64::max);
    let at_hat = oracle.evaluate(sol.lambda_star).unwrap().loss;
    assert!(
        at_hat >= 0.97 * at_best,
        "oracle loss {at_hat} at lambda* vs {at_best}"
    );
}

#[test]
fn high_dimension_still_yields_a_solution() {
    let (_, panel) = setup(450, 300, 31);
    let s = sample_covariance(&panel);
    let sol = Problem::new(s, equally_weighted(450), 1.5)
        .unwrap()
        .optimize(&FitOptions::default())
        .unwrap();
    assert!(sol.lambda_star > 0.0 && sol.lambda_star < 0.96);
    assert!((sol.final_weights.as_vector().sum() - 1.0).abs() < 1e-10);
}
