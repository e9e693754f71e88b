//! Double water filling for the Gaussian product channel.
//!
//! The jammer pours state power of volume `lambda` onto the noise floor
//! `sigma_j^2`, bringing the level to `beta`; the user then pours input power
//! of volume `gamma` onto the combined floor, bringing the level to `alpha`:
//!
//! ```text
//! N_j* = [beta  - sigma_j^2]+            sum_j N_j* = lambda
//! P_j* = [alpha - (N_j* + sigma_j^2)]+   sum_j P_j* = gamma
//! ```
//!
//! The random code capacity is `sum_j 1/2 log2(1 + P_j*/(N_j* + sigma_j^2))`
//! bits per channel use; the deterministic code capacity equals it when
//! `gamma > lambda` and is 0 otherwise. `verify_kkt` and `saddle_check`
//! validate that the allocation solves the underlying min-max game.

use crate::error::{Error, Result};
use crate::model::ParallelGaussianSpec;
use crate::random::{derived_rng, uniform_simplex};

/// Compensated (Neumaier) summation; keeps the water-level residual near
/// machine precision even for thousands of terms.
pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
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

fn excess(floor: &[f64], level: f64) -> f64 {
    neumaier_sum(floor.iter().map(|&f| (level - f).max(0.0)))
}

/// Water level with a caller-chosen volume residual tolerance.
///
/// Bisection on `[min floor, max floor + volume]`; the filled volume
/// `sum_j [L - floor_j]+` is piecewise linear and nondecreasing in `L`, so
/// bisection is unconditionally robust. After bisection the level is snapped
/// to the exact solution for the identified active set whenever that solution
/// is consistent, which makes levels like Fig-style rationals exact.
pub(crate) fn water_level_tol(floor: &[f64], volume: f64, tol: f64) -> f64 {
    assert!(!floor.is_empty(), "floor must be nonempty");
    assert!(volume >= 0.0, "volume must be >= 0");
    let min_floor = floor.iter().cloned().fold(f64::INFINITY, f64::min);
    if volume == 0.0 {
        // Convention: zero volume leaves the vessel untouched.
        return min_floor;
    }
    let max_floor = floor.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = min_floor;
    let mut hi = max_floor + volume;
    let mut level = 0.5 * (lo + hi);
    for _ in 0..200 {
        level = 0.5 * (lo + hi);
        let e = excess(floor, level);
        if (e - volume).abs() <= tol {
            break;
        }
        if e < volume {
            lo = level;
        } else {
            hi = level;
        }
    }
    // Snap: solve sum_{active} (L - floor_j) = volume exactly.
    let active: Vec<f64> = floor.iter().cloned().filter(|&f| f < level).collect();
    if !active.is_empty() {
        let k = active.len() as f64;
        let snapped = (volume + neumaier_sum(active.into_iter())) / k;
        if (excess(floor, snapped) - volume).abs() <= (excess(floor, level) - volume).abs() {
            level = snapped;
        }
    }
    level
}

/// The level `L` with `sum_j [L - floor_j]+ = volume`, to absolute volume
/// residual `1e-12`. Returns `min_j floor_j` when `volume = 0`.
pub fn water_level(floor: &[f64], volume: f64) -> f64 {
    water_level_tol(floor, volume, 1e-12)
}

/// Jammer level, user level, and the per-channel power allocations.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillAllocation {
    pub beta: f64,
    pub alpha: f64,
    pub n_star: Vec<f64>,
    pub p_star: Vec<f64>,
}

impl WaterfillAllocation {
    /// Combined interference power `N_j* + sigma_j^2` of channel `j`.
    pub fn interference(&self, spec: &ParallelGaussianSpec, j: usize) -> f64 {
        self.n_star[j] + spec.sigma2[j]
    }
}

/// Two-stage water filling: the jammer fills onto `sigma^2`, the user onto
/// `N* + sigma^2`.
pub fn double_waterfill(spec: &ParallelGaussianSpec) -> WaterfillAllocation {
    let beta = water_level(&spec.sigma2, spec.constraints.lambda);
    let n_star: Vec<f64> = spec.sigma2.iter().map(|&s2| (beta - s2).max(0.0)).collect();
    let floor2: Vec<f64> = spec
        .sigma2
        .iter()
        .zip(n_star.iter())
        .map(|(&s2, &n)| s2 + n)
        .collect();
    let alpha = water_level(&floor2, spec.constraints.gamma);
    let p_star: Vec<f64> = floor2.iter().map(|&f| (alpha - f).max(0.0)).collect();
    WaterfillAllocation { beta, alpha, n_star, p_star }
}

fn payoff(p: &[f64], n: &[f64], sigma2: &[f64]) -> f64 {
    let mut v = 0.0;
    for j in 0..sigma2.len() {
        v += 0.5 * (1.0 + p[j] / (n[j] + sigma2[j])).log2();
    }
    v
}

/// Random code capacity of the product channel, in bits per channel use.
pub fn random_code_capacity_product(spec: &ParallelGaussianSpec) -> f64 {
    let alloc = double_waterfill(spec);
    payoff(&alloc.p_star, &alloc.n_star, &spec.sigma2)
}

/// Closed form `sum_j 1/2 log2(max(alpha, sigma_j^2) / max(beta, sigma_j^2))`;
/// equals the allocation form of the capacity.
pub fn capacity_closed_form(spec: &ParallelGaussianSpec, alloc: &WaterfillAllocation) -> f64 {
    spec.sigma2
        .iter()
        .map(|&s2| 0.5 * (alloc.alpha.max(s2) / alloc.beta.max(s2)).log2())
        .sum()
}

/// Deterministic code capacity: the random code capacity when
/// `gamma > lambda`, 0 otherwise.
pub fn deterministic_code_capacity_product(spec: &ParallelGaussianSpec) -> f64 {
    if spec.constraints.gamma > spec.constraints.lambda {
        random_code_capacity_product(spec)
    } else {
        0.0
    }
}

/// Scalar Gaussian AVC: `(random, deterministic)` capacities.
///
/// `random = 1/2 log2(1 + gamma / (sigma2 + lambda))`; the deterministic
/// capacity equals it when `lambda < gamma` and is 0 otherwise.
pub fn scalar_capacity(gamma: f64, lambda: f64, sigma2: f64) -> (f64, f64) {
    let random = 0.5 * (1.0 + gamma / (sigma2 + lambda)).log2();
    let det = if lambda < gamma { random } else { 0.0 };
    (random, det)
}

/// Residuals of the min-max optimality conditions at a candidate allocation.
///
/// With `theta = (alpha - beta) / (alpha beta)` the jammer's allocation is
/// optimal iff `sum N_j = lambda`, `N_j >= 0`,
/// `P_j / ((N_j + s_j)(N_j + s_j + P_j)) <= theta`, and the product of slack
/// and `N_j` vanishes, for every channel.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub theta: f64,
    pub budget_residual: f64,
    pub nonneg_residual: Vec<f64>,
    pub ineq_residual: Vec<f64>,
    pub slack_residual: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        let vecmax = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max);
        self.budget_residual
            .max(vecmax(&self.nonneg_residual))
            .max(vecmax(&self.ineq_residual))
            .max(vecmax(&self.slack_residual))
    }
}

/// Evaluate the optimality conditions at `alloc` with tolerance `tol`.
pub fn verify_kkt(
    spec: &ParallelGaussianSpec,
    alloc: &WaterfillAllocation,
    tol: f64,
) -> Result<KktReport> {
    if alloc.n_star.len() != spec.d || alloc.p_star.len() != spec.d {
        return Err(Error::DimensionMismatch(format!(
            "allocation has {} jammer / {} user entries for d = {}",
            alloc.n_star.len(),
            alloc.p_star.len(),
            spec.d
        )));
    }
    let theta = (alloc.alpha - alloc.beta) / (alloc.alpha * alloc.beta);
    let budget_residual =
        (neumaier_sum(alloc.n_star.iter().cloned()) - spec.constraints.lambda).abs();
    let mut nonneg_residual = Vec::with_capacity(spec.d);
    let mut ineq_residual = Vec::with_capacity(spec.d);
    let mut slack_residual = Vec::with_capacity(spec.d);
    for j in 0..spec.d {
        let n = alloc.n_star[j];
        let p = alloc.p_star[j];
        let den = (n + spec.sigma2[j]) * (n + spec.sigma2[j] + p);
        let ratio = p / den;
        nonneg_residual.push((-n).max(0.0));
        ineq_residual.push((ratio - theta).max(0.0));
        slack_residual.push(((theta - ratio) * n).abs());
    }
    let pass = budget_residual <= tol
        && nonneg_residual.iter().all(|&r| r <= tol)
        && ineq_residual.iter().all(|&r| r <= tol)
        && slack_residual.iter().all(|&r| r <= tol);
    Ok(KktReport {
        theta,
        budget_residual,
        nonneg_residual,
        ineq_residual,
        slack_residual,
        tolerance: tol,
        pass,
    })
}

/// Largest payoff improvement found by random unilateral deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    pub max_user_gain: f64,
    pub max_jammer_gain: f64,
    pub trials: usize,
}

/// Sample `trials` random feasible deviations for each player (uniform on the
/// respective budget simplex, the other player held at `alloc`) and report the
/// largest improvement either player found. At the double water filling
/// allocation both values are nonpositive up to rounding.
///
/// Trial `i` draws its randomness from `(seed, i)`, so the report does not
/// depend on evaluation order.
pub fn saddle_check(
    spec: &ParallelGaussianSpec,
    alloc: &WaterfillAllocation,
    trials: usize,
    seed: u64,
) -> SaddleReport {
    assert!(trials >= 1, "trials must be >= 1");
    let base = payoff(&alloc.p_star, &alloc.n_star, &spec.sigma2);
    let mut max_user_gain = f64::NEG_INFINITY;
    let mut max_jammer_gain = f64::NEG_INFINITY;
    for i in 0..trials {
        let mut rng = derived_rng(seed, i as u64);
        let p_dev = uniform_simplex(&mut rng, spec.d, spec.constraints.gamma);
        let n_dev = uniform_simplex(&mut rng, spec.d, spec.constraints.lambda);
        max_user_gain = max_user_gain.max(payoff(&p_dev, &alloc.n_star, &spec.sigma2) - base);
        max_jammer_gain = max_jammer_gain.max(base - payoff(&alloc.p_star, &n_dev, &spec.sigma2));
    }
    SaddleReport { max_user_gain, max_jammer_gain, trials }
}

/// Minimal state cost for the jammer to symmetrize the product channel at a
/// given diagonal Gaussian input: the trace of the input covariance.
pub fn gaussian_symm_cost(powers: &[f64]) -> f64 {
    debug_assert!(powers.iter().all(|&p| p >= 0.0));
    powers.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn ten_channel_spec() -> ParallelGaussianSpec {
        ParallelGaussianSpec::new(
            vec![5.0, 8.0, 3.0, 1.5, 2.5, 1.8, 3.2, 9.0, 4.5, 5.5],
            13.0,
            8.0,
        )
        .unwrap()
    }

    #[test]
    fn water_level_ten_channel_jammer() {
        let spec = ten_channel_spec();
        let level = water_level(&spec.sigma2, 8.0);
        assert!((level - 4.0).abs() < 1e-12, "level {level}");
    }

    #[test]
    fn water_level_zero_volume_is_min_floor() {
        assert_eq!(water_level(&[1.0, 2.0, 4.0], 0.0), 1.0);
    }

    #[test]
    fn water_level_partial_fill() {
        // [L-1]+ + [L-2]+ + [L-4]+ = 2  =>  L = 2.5
        let level = water_level(&[1.0, 2.0, 4.0], 2.0);
        assert!((level - 2.5).abs() < 1e-12, "level {level}");
    }

    #[test]
    fn double_waterfill_ten_channels() {
        let spec = ten_channel_spec();
        let alloc = double_waterfill(&spec);
        assert!((alloc.beta - 4.0).abs() < 1e-12);
        assert!((alloc.alpha - 6.0).abs() < 1e-12);
        let n_expected = [0.0, 0.0, 1.0, 2.5, 1.5, 2.2, 0.8, 0.0, 0.0, 0.0];
        let p_expected = [1.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0, 1.5, 0.5];
        for j in 0..10 {
            assert!((alloc.n_star[j] - n_expected[j]).abs() < 1e-12, "N[{j}]");
            assert!((alloc.p_star[j] - p_expected[j]).abs() < 1e-12, "P[{j}]");
        }
        let p_sum: f64 = alloc.p_star.iter().sum();
        assert!((p_sum - 13.0).abs() < 1e-12);
    }

    #[test]
    fn double_waterfill_single_channel() {
        let spec = ParallelGaussianSpec::new(vec![1.0], 2.0, 1.0).unwrap();
        let alloc = double_waterfill(&spec);
        assert_eq!(alloc.beta, 2.0);
        assert_eq!(alloc.alpha, 4.0);
        assert_eq!(alloc.n_star, vec![1.0]);
        assert_eq!(alloc.p_star, vec![2.0]);
    }

    #[test]
    fn ten_channel_capacity_matches_closed_form_value() {
        let spec = ten_channel_spec();
        let cap = random_code_capacity_product(&spec);
        // 1/2 (log2 1.2 + 5 log2 1.5 + log2 4/3 + log2 12/11)
        let expected = 0.5
            * ((1.2f64).log2()
                + 5.0 * (1.5f64).log2()
                + (4.0f64 / 3.0).log2()
                + (12.0f64 / 11.0).log2());
        assert!((cap - expected).abs() < 1e-9, "cap {cap} vs {expected}");
        assert!((cap - 1.864208).abs() < 1e-6);
        let alloc = double_waterfill(&spec);
        assert!((capacity_closed_form(&spec, &alloc) - cap).abs() < 1e-9);
    }

    #[test]
    fn scalar_formula_cases() {
        let (r, d) = scalar_capacity(1.0, 1.0, 1.0);
        assert!((r - 0.5 * (1.5f64).log2()).abs() < 1e-15);
        assert!((r - 0.292481).abs() < 1e-6);
        assert_eq!(d, 0.0);

        let (r, d) = scalar_capacity(2.0, 1.0, 1.0);
        assert!((r - 0.5).abs() < 1e-15);
        assert_eq!(d, r);

        let (r, d) = scalar_capacity(1e-300, 1.0, 1.0);
        assert!(r < 1e-12);
        assert!(d < 1e-12);
    }

    #[test]
    fn deterministic_capacity_branches() {
        let spec = ten_channel_spec();
        assert!(deterministic_code_capacity_product(&spec) > 0.0);
        let tie = ParallelGaussianSpec::new(vec![1.0, 2.0], 1.0, 1.0).unwrap();
        assert_eq!(deterministic_code_capacity_product(&tie), 0.0);
        let worse = ParallelGaussianSpec::new(vec![1.0, 2.0], 1.0, 2.0).unwrap();
        assert_eq!(deterministic_code_capacity_product(&worse), 0.0);
    }

    #[test]
    fn kkt_passes_at_optimum() {
        let spec = ten_channel_spec();
        let alloc = double_waterfill(&spec);
        let report = verify_kkt(&spec, &alloc, 1e-9).unwrap();
        assert!(report.pass, "max residual {}", report.max_residual());
        assert!((report.theta - (6.0 - 4.0) / 24.0).abs() < 1e-12);
    }

    #[test]
    fn kkt_fails_on_swapped_jammer_powers() {
        let spec = ten_channel_spec();
        let mut alloc = double_waterfill(&spec);
        alloc.n_star.swap(2, 3);
        let report = verify_kkt(&spec, &alloc, 1e-9).unwrap();
        assert!(!report.pass);
        assert!(report.max_residual() > 1e-3);
    }

    #[test]
    fn kkt_single_channel() {
        let spec = ParallelGaussianSpec::new(vec![1.0], 2.0, 1.0).unwrap();
        let alloc = double_waterfill(&spec);
        assert!(verify_kkt(&spec, &alloc, 1e-9).unwrap().pass);
    }

    #[test]
    fn kkt_dimension_mismatch() {
        let spec = ten_channel_spec();
        let alloc = WaterfillAllocation {
            beta: 4.0,
            alpha: 6.0,
            n_star: vec![0.0; 3],
            p_star: vec![0.0; 3],
        };
        assert!(matches!(
            verify_kkt(&spec, &alloc, 1e-9),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn saddle_check_optimal_allocation() {
        let spec = ten_channel_spec();
        let alloc = double_waterfill(&spec);
        let report = saddle_check(&spec, &alloc, 10_000, 1);
        assert!(report.max_user_gain <= 1e-7, "user gain {}", report.max_user_gain);
        assert!(report.max_jammer_gain <= 1e-7, "jammer gain {}", report.max_jammer_gain);
    }

    #[test]
    fn saddle_check_detects_suboptimal_user() {
        let spec = ten_channel_spec();
        let mut alloc = double_waterfill(&spec);
        alloc.p_star = vec![13.0 / 10.0; 10];
        let report = saddle_check(&spec, &alloc, 10_000, 1);
        assert!(report.max_user_gain > 0.0);
    }

    #[test]
    fn saddle_check_single_channel_is_exact_zero() {
        let spec = ParallelGaussianSpec::new(vec![1.0], 2.0, 1.0).unwrap();
        let alloc = double_waterfill(&spec);
        let report = saddle_check(&spec, &alloc, 100, 9);
        assert_eq!(report.max_user_gain, 0.0);
        assert_eq!(report.max_jammer_gain, 0.0);
    }

    #[test]
    fn gaussian_symm_cost_is_trace() {
        assert_eq!(gaussian_symm_cost(&[1.0, 0.0, 2.0]), 3.0);
        assert_eq!(gaussian_symm_cost(&[]), 0.0);
        let spec = ten_channel_spec();
        let alloc = double_waterfill(&spec);
        assert!((gaussian_symm_cost(&alloc.p_star) - 13.0).abs() < 1e-12);
    }
}
