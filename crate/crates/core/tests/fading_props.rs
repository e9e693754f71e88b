//! Structural properties of the fading-channel allocations.

use avcap_core::fading::{
    fading_det_capacity, fading_random_capacity, mimicry_cost, FadingAllocation,
};
use avcap_core::model::{Constraints, FadingSpec};
use avcap_core::random::{derived_rng, uniform_simplex};
use rand::Rng;

fn spec(theta: Vec<f64>, p_t: Vec<f64>, sigma2: f64, gamma: f64, lambda: f64) -> FadingSpec {
    let s = FadingSpec {
        theta,
        p_t,
        sigma2,
        constraints: Constraints { gamma, lambda },
    };
    s.validate().unwrap();
    s
}

#[test]
fn mimicry_cost_is_the_weighted_second_moment() {
    let s = spec(vec![0.5, 1.0, 2.0], vec![0.2, 0.5, 0.3], 1.0, 2.0, 1.0);
    let omega = [1.0, 2.0, 0.5];
    let expected = 0.2 * 0.25 * 1.0 + 0.5 * 1.0 * 2.0 + 0.3 * 4.0 * 0.5;
    assert_eq!(mimicry_cost(&s, &omega), expected);
}

#[test]
fn mimicry_threshold_bounds_random_allocations() {
    // L* = gamma max t^2 dominates E[T^2 omega(T)] over the budget set.
    let s = spec(vec![0.5, 1.0, 1.5], vec![0.3, 0.4, 0.3], 1.0, 2.0, 1.0);
    let l_star = s.constraints.gamma * 2.25;
    let mut rng = derived_rng(51, 0);
    for _ in 0..500 {
        let split = uniform_simplex(&mut rng, 3, s.constraints.gamma);
        // omega_t = split_t / w_t spends exactly gamma.
        let omega: Vec<f64> =
            split.iter().zip(s.p_t.iter()).map(|(&b, &w)| b / w).collect();
        assert!(mimicry_cost(&s, &omega) <= l_star + 1e-9);
    }
}

#[test]
fn deterministic_never_exceeds_random_fading() {
    let mut rng = derived_rng(52, 0);
    for _ in 0..10 {
        let t0: f64 = rng.gen_range(0.2..0.8);
        let t1: f64 = rng.gen_range(0.9..2.0);
        let s = spec(
            vec![t0, t1],
            vec![0.5, 0.5],
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.1..1.0),
        );
        let random = fading_random_capacity(&s).unwrap().value;
        let det = fading_det_capacity(&s).unwrap().value;
        assert!(det <= random + 1e-6, "det {det} > random {random}");
    }
}

#[test]
fn allocation_is_opportunistic() {
    // If a coefficient gets power, every coefficient with a lower effective
    // floor does too, and unused coefficients have floors above the level.
    let s = spec(vec![0.4, 0.8, 1.6], vec![1.0 / 3.0; 3], 1.0, 1.0, 0.5);
    let cap = fading_random_capacity(&s).unwrap();
    let FadingAllocation { omega, lambda } = cap.allocation;
    let floors: Vec<f64> = (0..3)
        .map(|t| (lambda[t] + s.sigma2) / (s.theta[t] * s.theta[t]))
        .collect();
    let level = (0..3)
        .filter(|&t| omega[t] > 1e-9)
        .map(|t| floors[t] + omega[t])
        .fold(0.0f64, f64::max);
    for t in 0..3 {
        if omega[t] <= 1e-9 {
            assert!(floors[t] >= level - 1e-6, "idle coefficient below the water level");
        } else {
            assert!((floors[t] + omega[t] - level).abs() <= 1e-6, "uneven water level");
        }
    }
}

#[test]
fn det_capacity_with_binding_constraint_stays_positive() {
    // L* = 2 > lambda = 1.5; the mimicry constraint binds but capacity > 0.
    let s = spec(vec![0.5, 1.0], vec![0.5, 0.5], 1.0, 2.0, 1.5);
    let det = fading_det_capacity(&s).unwrap();
    assert!((det.l_star - 2.0).abs() < 1e-12);
    assert!(det.value > 0.0);
    let alloc = det.allocation.unwrap();
    assert!(mimicry_cost(&s, &alloc.omega) >= 1.5 - 1e-6);
    let random = fading_random_capacity(&s).unwrap().value;
    assert!(det.value <= random + 1e-6);
}
