//! Colored-noise capacity: double water filling in the frequency domain and
//! its finite-blocklength Toeplitz-eigenvalue counterpart.
//!
//! For a stationary noise process with power spectral density `Psi`, the
//! jammer fills `[beta - Psi]+` to volume `lambda` and the user fills
//! `[alpha - (b* + Psi)]+` to volume `gamma` (volumes are `(1/2pi)` integrals
//! over `[-pi, pi]`). The random code capacity is the band integral of
//! `1/2 log2(1 + a*/(b* + Psi))`, equivalently of `G(Psi(omega))`.
//!
//! At finite blocklength `n` the same allocation runs over the eigenvalues of
//! the `n x n` Toeplitz covariance `K(i,j) = r(|i-j|)`; by the Szego-type
//! limit the per-symbol capacity `C_n` converges to the band integral as
//! `n -> infinity`.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, SymMatrix};
use crate::model::{Psd, SpectralSpec};
use crate::waterfill::{neumaier_sum, water_level_tol};
use std::f64::consts::PI;

/// Eigenvalues below this are floored before water filling, keeping the log
/// terms finite (the regularity assumption sigma_i^2 > delta).
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Eigenvalues in `[-NEG_EIG_TOL, 0)` are rounded to 0; anything lower is a
/// genuine PSD violation.
pub const NEG_EIG_TOL: f64 = 1e-9;

/// Uniform midpoint grid `omega_k = -pi + (2k+1) pi / m` on `[-pi, pi]`.
pub fn midpoint_grid(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| -PI + (2.0 * k as f64 + 1.0) * PI / m as f64)
        .collect()
}

/// Autocorrelation `r(l) = (1/2pi) int Psi(omega) cos(l omega) domega` for
/// `l = 0..=max_lag`.
///
/// For the `Autocorr` representation the coefficients are returned exactly
/// (zero beyond the stored lag); for a sampled density the integral is a
/// composite midpoint rule on the stored grid.
pub fn autocorr_from_psd(spec: &SpectralSpec, max_lag: usize) -> Vec<f64> {
    match &spec.psd {
        Psd::Autocorr(r) => (0..=max_lag)
            .map(|l| if l < r.len() { r[l] } else { 0.0 })
            .collect(),
        Psd::Grid(values) => {
            let m = values.len();
            let omegas = midpoint_grid(m);
            (0..=max_lag)
                .map(|l| {
                    neumaier_sum(
                        values
                            .iter()
                            .zip(omegas.iter())
                            .map(|(&v, &w)| v * (l as f64 * w).cos()),
                    ) / m as f64
                })
                .collect()
        }
    }
}

/// Water levels and allocation densities on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAllocation {
    pub beta: f64,
    pub alpha: f64,
    pub omegas: Vec<f64>,
    pub psi: Vec<f64>,
    pub b_star: Vec<f64>,
    pub a_star: Vec<f64>,
}

/// Double water filling in the frequency domain at an `m`-point midpoint grid.
pub fn freq_double_waterfill(spec: &SpectralSpec, m: usize) -> SpectralAllocation {
    assert!(m >= 64, "quadrature grid must have at least 64 points");
    let gamma = spec.constraints.gamma;
    let lambda = spec.constraints.lambda;
    let omegas = midpoint_grid(m);
    let psi: Vec<f64> = omegas.iter().map(|&w| spec.psd.eval(w)).collect();
    // (1/2pi) int [beta - Psi]+ = lambda  <=>  sum_k [beta - Psi_k]+ = m lambda
    let tol = (m as f64) * 1e-10 * (1.0 + lambda + gamma);
    let beta = water_level_tol(&psi, m as f64 * lambda, tol);
    let b_star: Vec<f64> = psi.iter().map(|&p| (beta - p).max(0.0)).collect();
    let floor2: Vec<f64> = psi.iter().zip(b_star.iter()).map(|(&p, &b)| p + b).collect();
    let alpha = water_level_tol(&floor2, m as f64 * gamma, tol);
    let a_star: Vec<f64> = floor2.iter().map(|&f| (alpha - f).max(0.0)).collect();
    SpectralAllocation { beta, alpha, omegas, psi, b_star, a_star }
}

/// `(random, deterministic)` capacities of the colored-noise channel in bits
/// per channel use, by midpoint quadrature at grid size `m`.
pub fn colored_capacity(spec: &SpectralSpec, m: usize) -> (f64, f64) {
    let alloc = freq_double_waterfill(spec, m);
    let random = neumaier_sum((0..m).map(|k| {
        let den = alloc.b_star[k] + alloc.psi[k];
        if alloc.a_star[k] > 0.0 {
            0.5 * (1.0 + alloc.a_star[k] / den).log2()
        } else {
            0.0
        }
    })) / m as f64;
    let det = if spec.constraints.gamma > spec.constraints.lambda {
        random
    } else {
        0.0
    };
    (random, det)
}

/// Blocklength and covariance eigenvalues of the Toeplitz model.
#[derive(Debug, Clone)]
pub struct ToeplitzModel {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
}

impl ToeplitzModel {
    /// Build `K(i,j) = r(|i-j|)` and take its spectrum. Eigenvalues in
    /// `[-1e-9, 0)` are clamped to 0; anything lower is `NotPsd`.
    pub fn from_autocorr(r: &[f64], n: usize) -> Result<Self> {
        assert!(n >= 1, "blocklength must be >= 1");
        let eigs = jacobi_eigenvalues(SymMatrix::toeplitz(r, n));
        let min = eigs[0];
        if min < -NEG_EIG_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let eigenvalues = eigs.into_iter().map(|e| e.max(0.0)).collect();
        Ok(ToeplitzModel { n, eigenvalues })
    }
}

/// Double water filling over covariance eigenvalues with per-symbol budgets
/// `sum b_i* = n lambda`, `sum a_i* = n gamma`.
#[derive(Debug, Clone)]
pub struct ToeplitzAllocation {
    pub model: ToeplitzModel,
    pub beta: f64,
    pub alpha: f64,
    pub b_star: Vec<f64>,
    pub a_star: Vec<f64>,
}

impl ToeplitzAllocation {
    /// Fill over the spectrum of `model`, flooring eigenvalues at
    /// [`EIGENVALUE_FLOOR`].
    pub fn from_model(model: ToeplitzModel, gamma: f64, lambda: f64) -> Self {
        let n = model.n;
        let floors: Vec<f64> = model
            .eigenvalues
            .iter()
            .map(|&e| e.max(EIGENVALUE_FLOOR))
            .collect();
        let tol = 1e-12_f64.max(1e-14 * n as f64);
        let beta = water_level_tol(&floors, n as f64 * lambda, tol);
        let b_star: Vec<f64> = floors.iter().map(|&f| (beta - f).max(0.0)).collect();
        let floor2: Vec<f64> =
            floors.iter().zip(b_star.iter()).map(|(&f, &bi)| f + bi).collect();
        let alpha = water_level_tol(&floor2, n as f64 * gamma, tol);
        let a_star: Vec<f64> = floor2.iter().map(|&f| (alpha - f).max(0.0)).collect();
        ToeplitzAllocation { model, beta, alpha, b_star, a_star }
    }

    /// `(1/2n) sum log2(1 + a_i*/(b_i* + sigma_i^2))` in bits per channel use.
    pub fn capacity(&self) -> f64 {
        let n = self.model.n;
        neumaier_sum((0..n).map(|i| {
            let floor = self.model.eigenvalues[i].max(EIGENVALUE_FLOOR) + self.b_star[i];
            if self.a_star[i] > 0.0 {
                0.5 * (1.0 + self.a_star[i] / floor).log2()
            } else {
                0.0
            }
        })) / n as f64
    }
}

/// Finite-n capacity of the Toeplitz model built from `r`.
pub fn toeplitz_capacity(r: &[f64], n: usize, gamma: f64, lambda: f64) -> Result<f64> {
    let model = ToeplitzModel::from_autocorr(r, n)?;
    Ok(ToeplitzAllocation::from_model(model, gamma, lambda).capacity())
}

/// One row of the Szego convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct SzegoRow {
    pub n: usize,
    pub c_n: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SzegoTable {
    /// Limit capacity from the spectral integral.
    pub c_inf: f64,
    pub rows: Vec<SzegoRow>,
    /// Gaps nonincreasing between consecutive rows, up to a 10% wobble.
    pub gaps_monotone: bool,
}

/// Default quadrature grid for the limit integral.
pub const DEFAULT_GRID: usize = 4096;

/// Tabulate `|C_n - C_inf|` for each blocklength in `n_list`.
pub fn szego_convergence(
    r: &[f64],
    gamma: f64,
    lambda: f64,
    n_list: &[usize],
) -> Result<SzegoTable> {
    assert!(!n_list.is_empty(), "n_list must be nonempty");
    assert!(n_list.windows(2).all(|w| w[0] < w[1]), "n_list must be increasing");
    let spec = SpectralSpec {
        psd: Psd::Autocorr(r.to_vec()),
        constraints: crate::model::Constraints { gamma, lambda },
    };
    let (c_inf, _) = colored_capacity(&spec, DEFAULT_GRID);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let c_n = toeplitz_capacity(r, n, gamma, lambda)?;
        rows.push(SzegoRow { n, c_n, gap: (c_n - c_inf).abs() });
    }
    let gaps_monotone = rows
        .windows(2)
        .all(|w| w[1].gap <= 1.1 * w[0].gap + 1e-12);
    Ok(SzegoTable { c_inf, rows, gaps_monotone })
}

/// The capacity integrand as a function of the noise density value:
/// `1/2 log2(alpha/beta)` below `beta`, `1/2 log2(alpha/x)` on
/// `[beta, alpha)`, and 0 from `alpha` up.
pub fn eval_g(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha >= beta && beta >= 0.0 && x >= 0.0) {
        return Err(Error::Domain(format!(
            "eval_g requires alpha >= beta >= 0 and x >= 0 (x={x}, alpha={alpha}, beta={beta})"
        )));
    }
    if beta == 0.0 && x < alpha {
        return Err(Error::Domain(
            "eval_g diverges for beta = 0 and x < alpha".to_string(),
        ));
    }
    Ok(if x < beta {
        0.5 * (alpha / beta).log2()
    } else if x < alpha {
        0.5 * (alpha / x).log2()
    } else {
        0.0
    })
}
