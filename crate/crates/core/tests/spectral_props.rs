//! Properties of the frequency-domain allocation and the Toeplitz spectrum.

use avcap_core::linalg::{jacobi_eigenvalues, SymMatrix};
use avcap_core::model::{Constraints, Psd, SpectralSpec};
use avcap_core::random::derived_rng;
use avcap_core::spectral::{
    colored_capacity, eval_g, freq_double_waterfill, midpoint_grid, toeplitz_capacity,
    ToeplitzAllocation, ToeplitzModel,
};
use rand::Rng;

fn ar1_autocorr(rho: f64, lags: usize) -> Vec<f64> {
    (0..lags).map(|l| rho.powi(l as i32)).collect()
}

fn ar1_spec(rho: f64, gamma: f64, lambda: f64) -> SpectralSpec {
    SpectralSpec {
        psd: Psd::Autocorr(ar1_autocorr(rho, 48)),
        constraints: Constraints { gamma, lambda },
    }
}

/// Conjugate by a product of random Givens rotations (an orthogonal matrix).
fn random_conjugation(mut a: SymMatrix, seed: u64) -> SymMatrix {
    let n = a.n;
    let mut rng = derived_rng(seed, 0);
    for _ in 0..4 * n {
        let p = rng.gen_range(0..n);
        let mut q = rng.gen_range(0..n);
        while q == p {
            q = rng.gen_range(0..n);
        }
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (c, s) = (angle.cos(), angle.sin());
        for k in 0..n {
            let akp = a.get(k, p);
            let akq = a.get(k, q);
            a.set(k, p, c * akp - s * akq);
            a.set(k, q, s * akp + c * akq);
        }
        for k in 0..n {
            let apk = a.get(p, k);
            let aqk = a.get(q, k);
            a.set(p, k, c * apk - s * aqk);
            a.set(q, k, s * apk + c * aqk);
        }
    }
    a
}

#[test]
fn capacity_invariant_under_orthogonal_conjugation() {
    for (seed, n) in [(1u64, 16usize), (2, 48), (3, 64)] {
        let r = ar1_autocorr(0.6, 20);
        let direct = toeplitz_capacity(&r, n, 2.0, 0.5).unwrap();
        let conjugated = random_conjugation(SymMatrix::toeplitz(&r, n), seed);
        let eigs = jacobi_eigenvalues(conjugated)
            .into_iter()
            .map(|e| e.max(0.0))
            .collect::<Vec<_>>();
        let model = ToeplitzModel { n, eigenvalues: eigs };
        let cap = ToeplitzAllocation::from_model(model, 2.0, 0.5).capacity();
        assert!((cap - direct).abs() <= 1e-9, "n={n}: {cap} vs {direct}");
    }
}

#[test]
fn allocation_integrand_equals_g_function() {
    let m = 4096;
    for (rho, gamma, lambda) in [(0.3, 1.0, 0.5), (0.7, 4.0, 2.0)] {
        let spec = ar1_spec(rho, gamma, lambda);
        let alloc = freq_double_waterfill(&spec, m);
        let (cap, _) = colored_capacity(&spec, m);
        let grid = midpoint_grid(m);
        let mut g_sum = 0.0;
        for &omega in &grid {
            g_sum += eval_g(spec.psd.eval(omega), alloc.alpha, alloc.beta).unwrap();
        }
        g_sum /= m as f64;
        assert!((cap - g_sum).abs() <= 1e-9, "rho={rho}: {cap} vs {g_sum}");
    }
}

#[test]
fn grid_doubling_is_stable_on_ar1_family() {
    for rho in [0.3, 0.6, 0.9] {
        let spec = ar1_spec(rho, 2.0, 0.7);
        let (c1, _) = colored_capacity(&spec, 4096);
        let (c2, _) = colored_capacity(&spec, 8192);
        assert!((c1 - c2).abs() < 1e-6, "rho={rho}: {c1} vs {c2}");
    }
}

#[test]
fn per_symbol_budgets_are_conserved() {
    let mut rng = derived_rng(31, 0);
    for _ in 0..20 {
        let rho: f64 = rng.gen_range(0.0..0.8);
        let n = rng.gen_range(4..96);
        let gamma = rng.gen_range(0.5..5.0);
        let lambda = rng.gen_range(0.1..4.0);
        let model = ToeplitzModel::from_autocorr(&ar1_autocorr(rho, 32), n).unwrap();
        let alloc = ToeplitzAllocation::from_model(model, gamma, lambda);
        let b_sum: f64 = alloc.b_star.iter().sum();
        let a_sum: f64 = alloc.a_star.iter().sum();
        assert!(
            (b_sum - n as f64 * lambda).abs() <= 1e-8 * n as f64,
            "state budget at n={n}"
        );
        assert!(
            (a_sum - n as f64 * gamma).abs() <= 1e-8 * n as f64,
            "input budget at n={n}"
        );
    }
}

#[test]
fn moderate_blocklength_approaches_the_band_integral() {
    let spec = ar1_spec(0.5, 2.0, 0.5);
    let (c_inf, _) = colored_capacity(&spec, 4096);
    let c_n = toeplitz_capacity(&ar1_autocorr(0.5, 48), 256, 2.0, 0.5).unwrap();
    assert!((c_n - c_inf).abs() < 5e-3, "{c_n} vs {c_inf}");
}
