//! Capacity of the scalar Gaussian channel with fixed fading coefficients
//! `Y_i = theta_i X_i + S_i + Z_i`.
//!
//! The random code capacity is the saddle value of
//! `min_{lambda(.)} max_{omega(.)} E[ 1/2 log2(1 + T^2 omega(T) /
//! (lambda(T) + sigma^2)) ]` over per-coefficient power functions with
//! budgets `E omega(T) <= gamma` and `E lambda(T) <= lambda`. The inner
//! maximization is weighted water filling over the effective floors
//! `(lambda_t + sigma^2) / t^2`; the outer minimization runs projected
//! gradient descent with the envelope gradient.
//!
//! Deterministic coding is gated by the symmetrizability threshold
//! `L* = gamma max_t t^2` (the jammer must be able to mimic `theta X`): below
//! `lambda` the capacity is zero, above it the inner maximization carries the
//! extra constraint `E[T^2 omega(T)] >= lambda`.

use crate::error::{Error, Result};
use crate::model::FadingSpec;
use crate::opt::{dykstra, project_halfspace, project_orthant_budget};
use crate::waterfill::neumaier_sum;
use serde::Serialize;

/// `|L* - lambda|` below this is flagged as the open boundary case.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Per-coefficient power functions of the two players.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FadingAllocation {
    pub omega: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FadingCapacity {
    pub value: f64,
    pub allocation: FadingAllocation,
}

fn payoff(spec: &FadingSpec, omega: &[f64], lam: &[f64]) -> f64 {
    neumaier_sum(spec.theta.iter().enumerate().map(|(t, &th)| {
        let w = spec.p_t[t];
        if w == 0.0 || th == 0.0 || omega[t] == 0.0 {
            0.0
        } else {
            w * 0.5 * (1.0 + th * th * omega[t] / (lam[t] + spec.sigma2)).log2()
        }
    }))
}

/// Weighted water filling: maximize `sum w_t 1/2 log2(1 + omega_t / floor_t)`
/// subject to `sum w_t omega_t = budget`, `omega >= 0`. Coefficients with
/// `t = 0` have an infinite effective floor and receive nothing.
fn weighted_waterfill(floors: &[f64], weights: &[f64], budget: f64) -> Vec<f64> {
    let active: Vec<usize> = (0..floors.len())
        .filter(|&t| weights[t] > 0.0 && floors[t].is_finite())
        .collect();
    if active.is_empty() || budget <= 0.0 {
        return vec![0.0; floors.len()];
    }
    let fill = |level: f64| -> f64 {
        neumaier_sum(active.iter().map(|&t| weights[t] * (level - floors[t]).max(0.0)))
    };
    let lo = active.iter().map(|&t| floors[t]).fold(f64::INFINITY, f64::min);
    let hi0 = active.iter().map(|&t| floors[t]).fold(f64::NEG_INFINITY, f64::max);
    let total_w: f64 = active.iter().map(|&t| weights[t]).sum();
    let mut a = lo;
    let mut b = hi0 + budget / total_w.clamp(1e-300, 1.0);
    while fill(b) < budget {
        b *= 2.0;
    }
    let mut level = b;
    for _ in 0..200 {
        level = 0.5 * (a + b);
        let f = fill(level);
        if (f - budget).abs() <= 1e-13 * (1.0 + budget) {
            break;
        }
        if f < budget {
            a = level;
        } else {
            b = level;
        }
    }
    // Snap to the exact level of the active set.
    let wet: Vec<usize> = active.iter().cloned().filter(|&t| floors[t] < level).collect();
    if !wet.is_empty() {
        let wsum: f64 = wet.iter().map(|&t| weights[t]).sum();
        let wf: f64 = wet.iter().map(|&t| weights[t] * floors[t]).sum();
        let snapped = (budget + wf) / wsum;
        if (fill(snapped) - budget).abs() <= (fill(level) - budget).abs() {
            level = snapped;
        }
    }
    (0..floors.len())
        .map(|t| {
            if weights[t] > 0.0 && floors[t].is_finite() {
                (level - floors[t]).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn effective_floors(spec: &FadingSpec, lam: &[f64]) -> Vec<f64> {
    spec.theta
        .iter()
        .enumerate()
        .map(|(t, &th)| {
            if th == 0.0 {
                f64::INFINITY
            } else {
                (lam[t] + spec.sigma2) / (th * th)
            }
        })
        .collect()
}

/// Best response of the user, optionally with the mimicry-cost constraint
/// `E[T^2 omega(T)] >= min_mimic`.
fn best_omega(spec: &FadingSpec, lam: &[f64], min_mimic: Option<f64>) -> Vec<f64> {
    let floors = effective_floors(spec, lam);
    let unconstrained = weighted_waterfill(&floors, &spec.p_t, spec.constraints.gamma);
    let Some(threshold) = min_mimic else {
        return unconstrained;
    };
    let t2w: Vec<f64> = spec
        .theta
        .iter()
        .zip(spec.p_t.iter())
        .map(|(&th, &w)| th * th * w)
        .collect();
    let mimic = |omega: &[f64]| -> f64 {
        omega.iter().zip(t2w.iter()).map(|(&o, &c)| o * c).sum()
    };
    if mimic(&unconstrained) >= threshold - 1e-12 {
        return unconstrained;
    }
    // Concave maximization over {omega >= 0, E omega <= gamma,
    // E T^2 omega >= threshold} by projected gradient with Dykstra projection.
    let weights = spec.p_t.clone();
    let gamma = spec.constraints.gamma;
    let orthant = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| x.max(0.0)).collect() };
    let cap = |v: &[f64]| -> Vec<f64> { project_halfspace(v, &weights, gamma, false) };
    let floor_hs = |v: &[f64]| -> Vec<f64> { project_halfspace(v, &t2w, threshold, true) };
    let project = |v: &[f64]| -> Vec<f64> {
        dykstra(v, &[&orthant, &cap, &floor_hs], 400)
    };
    let mut omega = project(&unconstrained);
    let value = |o: &[f64]| payoff(spec, o, lam);
    let mut best = value(&omega);
    let mut step = gamma.max(1.0);
    for _ in 0..400 {
        let g: Vec<f64> = (0..omega.len())
            .map(|t| {
                let th = spec.theta[t];
                if weights[t] == 0.0 || th == 0.0 {
                    0.0
                } else {
                    let den = lam[t] + spec.sigma2 + th * th * omega[t];
                    weights[t] * th * th / (2.0 * std::f64::consts::LN_2 * den)
                }
            })
            .collect();
        let probe: Vec<f64> = omega.iter().zip(g.iter()).map(|(&o, &gi)| o + step * gi).collect();
        let cand = project(&probe);
        let cand_v = value(&cand);
        if cand_v > best + 1e-14 {
            omega = cand;
            best = cand_v;
            step = (step * 1.8).min(64.0 * gamma.max(1.0));
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    omega
}

fn solve(spec: &FadingSpec, min_mimic: Option<f64>) -> Result<FadingCapacity> {
    let lam_budget = spec.constraints.lambda;
    let weights = &spec.p_t;
    let envelope = |lam: &[f64]| -> (f64, Vec<f64>) {
        let omega = best_omega(spec, lam, min_mimic);
        (payoff(spec, &omega, lam), omega)
    };
    // Start from the even split over supported coefficients.
    let mut lam = project_orthant_budget(&vec![lam_budget; spec.theta.len()], weights, lam_budget);
    let (mut best, mut omega) = envelope(&lam);
    let mut step = lam_budget.max(1.0);
    let mut residual = f64::INFINITY;
    for _ in 0..600 {
        let g: Vec<f64> = (0..lam.len())
            .map(|t| {
                let th = spec.theta[t];
                if weights[t] == 0.0 || th == 0.0 || omega[t] == 0.0 {
                    0.0
                } else {
                    let base = lam[t] + spec.sigma2;
                    let num = th * th * omega[t];
                    -weights[t] * num / (2.0 * std::f64::consts::LN_2 * base * (base + num))
                }
            })
            .collect();
        let probe: Vec<f64> = lam.iter().zip(g.iter()).map(|(&l, &gi)| l - gi).collect();
        residual = lam
            .iter()
            .zip(project_orthant_budget(&probe, weights, lam_budget).iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual < 1e-8 {
            break;
        }
        let mut eta = step;
        let mut accepted = false;
        for _ in 0..50 {
            let descent: Vec<f64> =
                lam.iter().zip(g.iter()).map(|(&l, &gi)| l - eta * gi).collect();
            let cand = project_orthant_budget(&descent, weights, lam_budget);
            let (cand_v, cand_omega) = envelope(&cand);
            if cand_v < best - 1e-14 {
                lam = cand;
                best = cand_v;
                omega = cand_omega;
                step = (eta * 2.0).min(64.0 * lam_budget.max(1.0));
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual > 1e-4 {
        return Err(Error::SolverDidNotConverge(format!(
            "fading state-player residual {residual:.3e}"
        )));
    }
    Ok(FadingCapacity {
        value: best,
        allocation: FadingAllocation { omega, lambda: lam },
    })
}

/// Random code capacity of the fixed-coefficient fading channel, with the
/// optimizing per-coefficient allocations.
pub fn fading_random_capacity(spec: &FadingSpec) -> Result<FadingCapacity> {
    solve(spec, None)
}

/// Minimal state cost for the jammer to mimic `theta X` at input powers
/// `omega`: exactly `E[T^2 omega(T)]`.
pub fn mimicry_cost(spec: &FadingSpec, omega: &[f64]) -> f64 {
    spec.theta
        .iter()
        .zip(spec.p_t.iter())
        .zip(omega.iter())
        .map(|((&th, &w), &o)| w * th * th * o)
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct FadingDetCapacity {
    pub value: f64,
    /// `L* = gamma max_t t^2`, the best mimicry cost the user can force.
    pub l_star: f64,
    pub boundary: bool,
    pub allocation: Option<FadingAllocation>,
}

/// Deterministic code capacity: zero when `L* <= lambda`; otherwise the
/// saddle with the extra constraint `E[T^2 omega(T)] >= lambda`, flagged when
/// `L*` sits on the threshold.
pub fn fading_det_capacity(spec: &FadingSpec) -> Result<FadingDetCapacity> {
    let max_t2 = spec
        .theta
        .iter()
        .zip(spec.p_t.iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&th, _)| th * th)
        .fold(0.0f64, f64::max);
    let l_star = spec.constraints.gamma * max_t2;
    let lambda = spec.constraints.lambda;
    let boundary = (l_star - lambda).abs() <= BOUNDARY_TOL;
    if l_star < lambda && !boundary {
        return Ok(FadingDetCapacity { value: 0.0, l_star, boundary: false, allocation: None });
    }
    let solved = solve(spec, Some(lambda))?;
    Ok(FadingDetCapacity {
        value: solved.value,
        l_star,
        boundary,
        allocation: Some(solved.allocation),
    })
}

/// Exhaustive grid oracle over both allocations for two-coefficient specs.
pub fn fading_grid_oracle(spec: &FadingSpec, steps: usize) -> Result<f64> {
    if spec.theta.len() != 2 {
        return Err(Error::Domain("oracle implemented for |Theta| = 2".to_string()));
    }
    let (w0, w1) = (spec.p_t[0], spec.p_t[1]);
    if w0 == 0.0 || w1 == 0.0 {
        return Err(Error::Domain("oracle needs both coefficients supported".to_string()));
    }
    let gamma = spec.constraints.gamma;
    let lambda = spec.constraints.lambda;
    let mut value = f64::INFINITY;
    for i in 0..=steps {
        let l0 = lambda / w0 * i as f64 / steps as f64;
        let l1 = (lambda - w0 * l0) / w1;
        let lam = vec![l0, l1];
        let mut best = f64::NEG_INFINITY;
        for jdx in 0..=steps {
            let o0 = gamma / w0 * jdx as f64 / steps as f64;
            let o1 = (gamma - w0 * o0) / w1;
            let omega = vec![o0, o1];
            best = best.max(payoff(spec, &omega, &lam));
        }
        value = value.min(best);
    }
    Ok(value)
}
