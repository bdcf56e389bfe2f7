use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roughspt::models::{
    log_optimal_portfolio, project_to_interior, realized_covariation_error, solve_lambda, DiffusionSpec,
    SimulationConfig,
};

fn random_interior(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}

#[test]
fn vol_stabilized_log_optimal_is_affine_in_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (alpha, gamma, dim) in [(1.0, 0.5, 3), (0.2, 0.8, 4), (-0.5, 0.4, 2)] {
        let spec = DiffusionSpec::vol_stabilized(alpha, gamma, 0.0, dim).unwrap();
        let kappa = (1.0 + alpha) / (2.0 * gamma);
        for _ in 0..20 {
            let x = random_interior(&mut rng, dim);
            let pi = log_optimal_portfolio(&spec, &x).unwrap();
            for (p, xi) in pi.iter().zip(&x) {
                let expected = kappa + (1.0 - dim as f64 * kappa) * xi;
                assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
            }
        }
    }
}

#[test]
fn log_optimal_ignores_the_constant_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let specs = [
        (
            DiffusionSpec::polynomial(0.15, 0.3, 0.2, 0.25, 0.0).unwrap(),
            DiffusionSpec::polynomial(0.15, 0.3, 0.2, 0.25, 7.5).unwrap(),
        ),
        (
            DiffusionSpec::vol_stabilized(0.4, 0.6, 0.0, 3).unwrap(),
            DiffusionSpec::vol_stabilized(0.4, 0.6, -3.0, 3).unwrap(),
        ),
    ];
    for (a, b) in &specs {
        for _ in 0..20 {
            let x = random_interior(&mut rng, 3);
            let pa = log_optimal_portfolio(a, &x).unwrap();
            let pb = log_optimal_portfolio(b, &x).unwrap();
            for (u, v) in pa.iter().zip(&pb) {
                assert!((u - v).abs() < 1e-12);
            }
            assert!((pa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn numerical_lambda_agrees_with_closed_forms_up_to_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let specs = [
        DiffusionSpec::polynomial(0.15, 0.3, 0.2, 0.25, 0.0).unwrap(),
        DiffusionSpec::vol_stabilized(0.7, 0.5, 1.3, 3).unwrap(),
    ];
    for spec in &specs {
        for _ in 0..100 {
            let x = random_interior(&mut rng, 3);
            let numeric = solve_lambda(spec, &x).unwrap();
            let closed = spec.closed_form_lambda(&x).unwrap();
            // λ is determined modulo the constant vector.
            let diff: Vec<f64> = numeric.iter().zip(&closed).map(|(a, b)| a - b).collect();
            let mean = diff.iter().sum::<f64>() / 3.0;
            let spread = diff.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            let scale = closed.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!(spread <= 1e-9 * scale, "{numeric:?} vs {closed:?}: spread {spread:e}");
        }
    }
}

#[test]
fn projection_lands_in_the_interior() {
    let mut x = vec![-0.1, 0.0, 1.4];
    project_to_interior(&mut x, 1e-6);
    assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(x.iter().all(|v| *v >= 1e-6 && *v <= 1.0 - 1e-6));
}

#[test]
fn simulated_covariation_matches_the_model() {
    let spec = DiffusionSpec::vol_stabilized(1.0, 0.5, 0.0, 3).unwrap();
    let config = SimulationConfig::new(1e-3, 1.0, 1000, 21);
    let err = realized_covariation_error(&spec, &config).unwrap();
    assert!(err <= 0.1, "relative error {err}");
}
