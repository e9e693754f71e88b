//! Randomized properties of the double water filling solution.

use avcap_core::model::ParallelGaussianSpec;
use avcap_core::random::derived_rng;
use avcap_core::waterfill::{
    capacity_closed_form, double_waterfill, random_code_capacity_product, scalar_capacity,
    verify_kkt, water_level,
};
use rand::Rng;

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn random_spec(rng: &mut impl Rng, max_d: usize) -> ParallelGaussianSpec {
    let d = rng.gen_range(1..=max_d);
    let sigma2: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..10.0)).collect();
    let gamma = rng.gen_range(0.1..20.0);
    let lambda = rng.gen_range(0.1..20.0);
    ParallelGaussianSpec::new(sigma2, gamma, lambda).unwrap()
}

#[test]
fn volume_conservation() {
    let mut rng = derived_rng(21, 0);
    for _ in 0..500 {
        let d = rng.gen_range(1..32);
        let floor: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..10.0)).collect();
        let volume = rng.gen_range(0.0..50.0);
        let level = water_level(&floor, volume);
        let filled = compensated_sum(floor.iter().map(|&f| (level - f).max(0.0)));
        assert!(
            (filled - volume).abs() <= 1e-12,
            "residual {:e} for d={d}",
            (filled - volume).abs()
        );
    }
}

#[test]
fn water_level_monotone_in_volume_and_floors() {
    let mut rng = derived_rng(22, 0);
    for _ in 0..200 {
        let d = rng.gen_range(1..16);
        let floor: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..5.0)).collect();
        let v1 = rng.gen_range(0.0..10.0);
        let v2 = v1 + rng.gen_range(0.0..10.0);
        let l1 = water_level(&floor, v1);
        let l2 = water_level(&floor, v2);
        assert!(l2 >= l1 - 1e-12, "volume monotonicity: {l1} vs {l2}");

        let mut raised = floor.clone();
        let j = rng.gen_range(0..d);
        raised[j] += rng.gen_range(0.0..3.0);
        let l3 = water_level(&raised, v1);
        assert!(l3 >= l1 - 1e-12, "floor monotonicity: {l1} vs {l3}");
    }
}

#[test]
fn closed_form_identity_over_random_specs() {
    let mut rng = derived_rng(23, 0);
    for _ in 0..1000 {
        let spec = random_spec(&mut rng, 16);
        let alloc = double_waterfill(&spec);
        let cap = random_code_capacity_product(&spec);
        let closed = capacity_closed_form(&spec, &alloc);
        assert!((cap - closed).abs() <= 1e-9, "{cap} vs {closed}");
    }
}

#[test]
fn allocation_structure_over_random_specs() {
    let mut rng = derived_rng(24, 0);
    for _ in 0..500 {
        let spec = random_spec(&mut rng, 16);
        let alloc = double_waterfill(&spec);
        // Levels: user pours after the jammer.
        assert!(alloc.alpha > alloc.beta, "alpha {} beta {}", alloc.alpha, alloc.beta);
        for j in 0..spec.d {
            // The jammer never invests in a channel the user discards.
            if alloc.n_star[j] > 1e-12 {
                assert!(alloc.p_star[j] > 0.0, "N>0 => P>0 at {j}");
            }
            // Output power identity.
            let out = alloc.p_star[j] + alloc.n_star[j] + spec.sigma2[j];
            let expect = alloc.alpha.max(spec.sigma2[j]);
            assert!((out - expect).abs() <= 1e-9, "output power at {j}");
        }
        let n_sum = compensated_sum(alloc.n_star.iter().cloned());
        let p_sum = compensated_sum(alloc.p_star.iter().cloned());
        assert!((n_sum - spec.constraints.lambda).abs() <= 1e-9);
        assert!((p_sum - spec.constraints.gamma).abs() <= 1e-9);
        // Pointwise allocation formulas.
        for j in 0..spec.d {
            assert!((alloc.n_star[j] - (alloc.beta - spec.sigma2[j]).max(0.0)).abs() <= 1e-12);
            let floor = alloc.n_star[j] + spec.sigma2[j];
            assert!((alloc.p_star[j] - (alloc.alpha - floor).max(0.0)).abs() <= 1e-12);
        }
    }
}

#[test]
fn permutation_equivariance() {
    let mut rng = derived_rng(25, 0);
    for _ in 0..100 {
        let spec = random_spec(&mut rng, 10);
        let alloc = double_waterfill(&spec);
        // Reverse is a permutation; any permutation factors into swaps.
        let mut perm: Vec<usize> = (0..spec.d).collect();
        for i in (1..perm.len()).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let sigma2_p: Vec<f64> = perm.iter().map(|&i| spec.sigma2[i]).collect();
        let spec_p = ParallelGaussianSpec::new(
            sigma2_p,
            spec.constraints.gamma,
            spec.constraints.lambda,
        )
        .unwrap();
        let alloc_p = double_waterfill(&spec_p);
        assert!((alloc.beta - alloc_p.beta).abs() <= 1e-12);
        assert!((alloc.alpha - alloc_p.alpha).abs() <= 1e-12);
        for (k, &i) in perm.iter().enumerate() {
            assert!((alloc_p.n_star[k] - alloc.n_star[i]).abs() <= 1e-12);
            assert!((alloc_p.p_star[k] - alloc.p_star[i]).abs() <= 1e-12);
        }
        let cap = random_code_capacity_product(&spec);
        let cap_p = random_code_capacity_product(&spec_p);
        assert!((cap - cap_p).abs() <= 1e-12);
    }
}

#[test]
fn single_channel_reduces_to_scalar_formula() {
    let mut rng = derived_rng(26, 0);
    for _ in 0..300 {
        let spec = random_spec(&mut rng, 1);
        let cap = random_code_capacity_product(&spec);
        let (scalar, _) =
            scalar_capacity(spec.constraints.gamma, spec.constraints.lambda, spec.sigma2[0]);
        assert!((cap - scalar).abs() <= 1e-12, "{cap} vs {scalar}");
    }
}

#[test]
fn kkt_holds_on_random_specs() {
    let mut rng = derived_rng(27, 0);
    for _ in 0..200 {
        let spec = random_spec(&mut rng, 16);
        let alloc = double_waterfill(&spec);
        let report = verify_kkt(&spec, &alloc, 1e-8).unwrap();
        assert!(report.pass, "max residual {:e}", report.max_residual());
    }
}
