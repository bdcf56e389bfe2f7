use std::sync::Arc;

use roughspt::fixtures::brownian;
use roughspt::linalg::{dist, norm};
use roughspt::path::{p_variation, two_param_p_variation, SampledPath, TimeGrid};
use roughspt::rough::{compensated_integral, left_point_sum, ControlledPath, RoughLift};
use roughspt::universal::{left_point_cross_integral, nontriviality_path, nontriviality_value};

/// Maximum of `sum cost(t_k, t_{k+1})` over every partition of `0..n`, by enumeration.
fn exhaustive(n: usize, cost: impl Fn(usize, usize) -> f64) -> f64 {
    let interior = n - 2;
    let mut best = 0.0_f64;
    for mask in 0u32..(1 << interior) {
        let mut nodes = vec![0];
        nodes.extend((0..interior).filter(|b| mask & (1 << b) != 0).map(|b| b + 1));
        nodes.push(n - 1);
        let total: f64 = nodes.windows(2).map(|w| cost(w[0], w[1])).sum();
        best = best.max(total);
    }
    best
}

#[test]
fn p_variation_matches_exhaustive_search() {
    for seed in 0..5 {
        let path = brownian(seed, 2, 1.0, 4).unwrap().truncate(11).unwrap();
        assert_eq!(path.len(), 12);
        for p in [1.0, 1.5, 2.0, 2.5] {
            let dp = p_variation(&path, p, None).unwrap().value();
            let brute = exhaustive(12, |i, j| dist(path.value(i), path.value(j)).powf(p));
            assert!((dp - brute).abs() <= 1e-12 * brute.max(1.0), "seed {seed} p {p}: {dp} vs {brute}");
        }
    }
}

#[test]
fn area_variation_matches_exhaustive_search() {
    for seed in 10..13 {
        let path = brownian(seed, 2, 1.0, 4).unwrap().truncate(11).unwrap();
        let lift = RoughLift::left_point(path, 2.5).unwrap();
        let p = 1.25;
        let dp = two_param_p_variation(0, 11, p, |s, t| lift.area(s, t)).unwrap().value();
        let brute = exhaustive(12, |s, t| norm(&lift.area(s, t)).powf(p)).powf(1.0 / p);
        assert!(dp.is_finite() && dp > 0.0);
        assert!((dp - brute).abs() <= 1e-12 * brute, "seed {seed}: {dp} vs {brute}");
    }
}

#[test]
fn small_p_variation_cases() {
    let grid = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
    let tent = SampledPath::new(grid.clone(), 1, vec![0.0, 1.0, 0.0]).unwrap();
    assert_eq!(p_variation(&tent, 2.0, None).unwrap().value(), 2.0);
    let ramp = SampledPath::new(grid.clone(), 1, vec![0.0, 0.4, 1.0]).unwrap();
    assert_eq!(p_variation(&ramp, 2.0, None).unwrap().value(), 1.0);
    let flat = SampledPath::new(grid, 1, vec![3.0; 3]).unwrap();
    assert_eq!(p_variation(&flat, 1.7, None).unwrap().value(), 0.0);
    let fine = TimeGrid::dyadic(1.0, 6).unwrap();
    let times = fine.times().to_vec();
    let sq = two_param_p_variation(0, 64, 1.0, |s, t| vec![(times[t] - times[s]).powi(2)]).unwrap();
    assert!((sq.value() - 1.0).abs() < 1e-15);
}

#[test]
fn brownian_bracket_is_near_one() {
    let path = brownian(77, 1, 1.0, 14).unwrap();
    let lift = RoughLift::left_point(path.clone(), 2.5).unwrap();
    let terminal = lift.bracket().value(path.len() - 1)[0];
    let squares: f64 = (0..path.len() - 1).map(|k| path.increment(k, k + 1)[0].powi(2)).sum();
    assert!((terminal - squares).abs() < 1e-10);
    // Standard deviation of the realised variance is sqrt(2 / 2^14) ≈ 0.011.
    assert!((terminal - 1.0).abs() < 0.05, "{terminal}");
}

#[test]
fn integral_of_path_against_itself() {
    let path = brownian(5, 1, 1.0, 12).unwrap().shifted(&[0.3]).unwrap();
    let lift = Arc::new(RoughLift::left_point(path.clone(), 2.5).unwrap());
    let bracket = lift.bracket();
    let f = ControlledPath::identity(lift);
    let integral = compensated_integral(&f, None).unwrap();
    let n = path.len() - 1;
    let (s0, st) = (path.value(0)[0], path.value(n)[0]);
    let expected = 0.5 * (st * st - s0 * s0 - bracket.value(n)[0]);
    assert!((integral.value(n)[0] - expected).abs() < 1e-8);
}

#[test]
fn smooth_self_integral_is_one_half() {
    let grid = TimeGrid::dyadic(1.0, 12).unwrap();
    let path = SampledPath::from_fn(grid, 1, |t| vec![t]).unwrap();
    let lift = Arc::new(RoughLift::left_point(path.clone(), 2.5).unwrap());
    let f = ControlledPath::identity(lift);
    let integral = compensated_integral(&f, None).unwrap();
    // Left-point error is half the mesh.
    assert!((integral.last()[0] - 0.5).abs() <= 0.5 / 4096.0 + 1e-15);
    let ones = path.map(1, |_, _| vec![1.0]).unwrap();
    let part = roughspt::path::Partition::full(path.len());
    let g = left_point_sum(&ones, &path, &part).unwrap();
    assert!((g.last()[0] - 1.0).abs() < 1e-14);
}

#[test]
fn nontriviality_quadrature_oracle() {
    let reference = left_point_cross_integral(&nontriviality_path(0.45, 10, 100_000).unwrap());
    let target = nontriviality_value(0.45, 10);
    assert!(((reference - target) / target).abs() < 1e-6, "{reference} vs {target}");
    for n in [1, 3, 5] {
        let v = left_point_cross_integral(&nontriviality_path(0.42, n, 4096).unwrap());
        let t = nontriviality_value(0.42, n);
        assert!(((v - t) / t).abs() < 1e-4, "n = {n}: {v} vs {t}");
    }
}
