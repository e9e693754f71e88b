//! Randomized properties of the symmetrizability LPs and the saddle solver.

use avcap_core::discrete::{
    deterministic_capacity_fixed_params, find_symmetrizer, min_symm_cost, mutual_info_cond,
    per_parameter_decomposition, random_capacity_fixed_params, random_capacity_with,
    symm_threshold, symmetrization_residual, SolverOptions, SymmCost,
};
use avcap_core::model::{Constraints, DiscreteAvcSpec};
use avcap_core::random::{derived_rng, uniform_simplex};
use rand::Rng;

fn bsc_kernel(eps: f64) -> Vec<Vec<Vec<f64>>> {
    let mut slice = vec![vec![vec![0.0; 2]; 2]; 2];
    for x in 0..2 {
        for s in 0..2 {
            for y in 0..2 {
                slice[x][s][y] = if y == (x ^ s) { 1.0 - eps } else { eps };
            }
        }
    }
    slice
}

fn bsc_spec(eps: f64, gamma: f64, lambda: f64) -> DiscreteAvcSpec {
    DiscreteAvcSpec {
        nx: 2,
        ns: 2,
        nt: 1,
        ny: 2,
        kernel: vec![bsc_kernel(eps)],
        p_t: vec![1.0],
        phi: vec![0.0, 1.0],
        l: vec![0.0, 1.0],
        constraints: Constraints { gamma, lambda },
    }
}

#[test]
fn bsc_min_cost_is_min_mass_for_random_inputs() {
    let slice = bsc_kernel(0.25);
    let l = [0.0, 1.0];
    let mut rng = derived_rng(41, 0);
    for _ in 0..200 {
        let p1: f64 = rng.gen_range(0.0..1.0);
        let p = [1.0 - p1, p1];
        let cost = min_symm_cost(&slice, &p, &l);
        let expected = p[0].min(p[1]);
        assert!(
            (cost.value() - expected).abs() <= 1e-8,
            "p1={p1}: {} vs {expected}",
            cost.value()
        );
        if let SymmCost::Feasible(kernel) = cost {
            assert!(symmetrization_residual(&slice, &kernel.j) <= 1e-8);
        } else {
            panic!("BSC must be symmetrizable");
        }
    }
}

#[test]
fn returned_kernels_always_satisfy_the_equalities() {
    let mut rng = derived_rng(42, 0);
    // Additive-noise channels y = x + s mod ny are symmetrizable for any
    // noise pmf; check the LP output against the defining equalities.
    for trial in 0..25 {
        let ny = rng.gen_range(2..5usize);
        let noise = uniform_simplex(&mut rng, ny, 1.0);
        let mut slice = vec![vec![vec![0.0; ny]; ny]; ny];
        for x in 0..ny {
            for s in 0..ny {
                for (z, &nz) in noise.iter().enumerate() {
                    slice[x][s][(x + s + z) % ny] += nz;
                }
            }
        }
        let j = find_symmetrizer(&slice)
            .unwrap_or_else(|| panic!("trial {trial}: additive channel must be symmetrizable"));
        assert!(symmetrization_residual(&slice, &j) <= 1e-8);
    }
}

#[test]
fn saddle_point_is_stable_under_random_alternatives() {
    let spec = bsc_spec(0.25, 0.5, 0.25);
    let result = random_capacity_fixed_params(&spec).unwrap();
    let base = mutual_info_cond(&spec.p_t, &result.p.rows, &result.q.rows, &spec.kernel).unwrap();
    let mut rng = derived_rng(43, 0);
    let budget_ok = |rows: &[Vec<f64>], costs: &[f64], cap: f64| -> bool {
        let spend: f64 = rows
            .iter()
            .zip(spec.p_t.iter())
            .map(|(row, &w)| {
                w * row.iter().zip(costs.iter()).map(|(&v, &c)| v * c).sum::<f64>()
            })
            .sum();
        spend <= cap
    };
    let mut tried_q = 0;
    let mut tried_p = 0;
    while tried_q < 100 || tried_p < 100 {
        let rows = vec![uniform_simplex(&mut rng, 2, 1.0)];
        if tried_q < 100 && budget_ok(&rows, &spec.l, spec.constraints.lambda) {
            tried_q += 1;
            let value =
                mutual_info_cond(&spec.p_t, &result.p.rows, &rows, &spec.kernel).unwrap();
            assert!(value >= base - 1e-5, "jammer alternative beats saddle: {value} < {base}");
        }
        if tried_p < 100 && budget_ok(&rows, &spec.phi, spec.constraints.gamma) {
            tried_p += 1;
            let value =
                mutual_info_cond(&spec.p_t, &rows, &result.q.rows, &spec.kernel).unwrap();
            assert!(value <= base + 1e-5, "user alternative beats saddle: {value} > {base}");
        }
    }
}

#[test]
fn capacity_monotone_in_budgets() {
    let opts = SolverOptions { restarts: 4, ..SolverOptions::default() };
    let gammas = [0.1, 0.25, 0.5];
    let lambdas = [0.05, 0.2, 0.4];
    let mut by_gamma = vec![Vec::new(); lambdas.len()];
    for (li, &lambda) in lambdas.iter().enumerate() {
        for &gamma in &gammas {
            let spec = bsc_spec(0.1, gamma, lambda);
            by_gamma[li].push(random_capacity_with(&spec, &opts).unwrap().value);
        }
    }
    for row in &by_gamma {
        for w in row.windows(2) {
            assert!(w[1] >= w[0] - 1e-4, "capacity must grow with gamma: {row:?}");
        }
    }
    for gi in 0..gammas.len() {
        for li in 1..lambdas.len() {
            assert!(
                by_gamma[li][gi] <= by_gamma[li - 1][gi] + 1e-4,
                "capacity must shrink with lambda"
            );
        }
    }
}

/// Quantized additive channel `Y = X + S` (noiseless) with square-law costs:
/// the threshold collapses to the input budget, matching the scalar Gaussian
/// picture where the cheapest symmetrizer mimics the input itself.
#[test]
fn quantized_gaussian_slice_threshold_is_the_input_budget() {
    let xs: Vec<i64> = (-2..=2).collect();
    let ss: Vec<i64> = (-4..=4).collect();
    let ny = 13; // sums in [-6, 6]
    let mut kernel = vec![vec![vec![0.0; ny]; ss.len()]; xs.len()];
    for (xi, &x) in xs.iter().enumerate() {
        for (si, &s) in ss.iter().enumerate() {
            kernel[xi][si][(x + s + 6) as usize] = 1.0;
        }
    }
    let spec = DiscreteAvcSpec {
        nx: xs.len(),
        ns: ss.len(),
        nt: 1,
        ny,
        kernel: vec![kernel],
        p_t: vec![1.0],
        phi: xs.iter().map(|&x| (x * x) as f64).collect(),
        l: ss.iter().map(|&s| (s * s) as f64).collect(),
        constraints: Constraints { gamma: 1.0, lambda: 0.5 },
    };
    let threshold = symm_threshold(&spec).unwrap();
    assert!(
        (threshold.value - 1.0).abs() <= 0.05,
        "L* = {} should be within 5% of gamma = 1",
        threshold.value
    );
    // The minimizing kernel for a symmetric input is the identity map s = x,
    // a 0-1 law.
    let p = threshold.argmax.unwrap().rows;
    match min_symm_cost(&spec.kernel[0], &p[0], &spec.l) {
        SymmCost::Feasible(kernel) => {
            assert!(kernel.is_zero_one_law(), "kernel {:?}", kernel.j);
        }
        SymmCost::Infeasible => panic!("additive channel is symmetrizable"),
    }
}

#[test]
fn identical_parameter_slices_split_budgets_evenly() {
    let spec = DiscreteAvcSpec {
        nx: 2,
        ns: 2,
        nt: 2,
        ny: 2,
        kernel: vec![bsc_kernel(0.25), bsc_kernel(0.25)],
        p_t: vec![0.5, 0.5],
        phi: vec![0.0, 1.0],
        l: vec![0.0, 1.0],
        constraints: Constraints { gamma: 0.5, lambda: 0.25 },
    };
    let decomposition = per_parameter_decomposition(&spec).unwrap();
    assert!(
        (decomposition.omega[0] - decomposition.omega[1]).abs() <= 1e-3,
        "input budgets {:?}",
        decomposition.omega
    );
    assert!(
        (decomposition.lambda[0] - decomposition.lambda[1]).abs() <= 1e-3,
        "state budgets {:?}",
        decomposition.lambda
    );
    let joint = random_capacity_fixed_params(&spec).unwrap().value;
    assert!((decomposition.value - joint).abs() <= 2e-3);
}

#[test]
fn deterministic_never_exceeds_random() {
    for (eps, gamma, lambda) in [(0.1, 0.5, 0.25), (0.25, 0.5, 0.25), (0.25, 0.3, 0.2)] {
        let spec = bsc_spec(eps, gamma, lambda);
        let random = random_capacity_fixed_params(&spec).unwrap().value;
        let det = deterministic_capacity_fixed_params(&spec).unwrap().value;
        assert!(
            det <= random + 1e-5,
            "eps={eps}, gamma={gamma}, lambda={lambda}: det {det} > random {random}"
        );
    }
}
