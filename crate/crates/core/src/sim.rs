//! Monte Carlo validation of the scalar deterministic-capacity phase
//! transition.
//!
//! Codewords live on the power sphere `||x||^2 = n gamma`, decoding is
//! minimum distance, and the jammer plays one of two strategies: iid Gaussian
//! noise at (almost) full state power, or mimicry of a uniformly drawn
//! codeword. When `lambda >= gamma` the mimicking jammer plants an impostor
//! codeword the decoder cannot distinguish from the transmitted one, forcing
//! an error rate near `1/2 (1 - 1/M)`; when `gamma > lambda` and the rate is
//! below capacity, decoding succeeds.
//!
//! Per-trial randomness is derived from `(seed, trial index)`, so reports are
//! bit-identical regardless of how trials are scheduled.

use crate::error::{Error, Result};
use crate::random::{derived_rng, fill_standard_normal};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Hard cap on `n * rate`: codebooks beyond `2^26` messages do not fit.
pub const MAX_RATE_BITS: f64 = 26.0;
/// RNG stream index reserved for codebook generation.
const CODEBOOK_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerStrategy {
    /// iid `N(0, lambda - delta)` with `delta = 0.01 lambda`, resampled until
    /// the power constraint holds.
    IidGaussian,
    /// A uniformly drawn codeword, rescaled to `||s||^2 = n min(gamma, lambda)`.
    CodewordMimic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    /// Rate in bits per channel use; the codebook holds `round(2^(n rate))`
    /// messages.
    pub rate: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub sigma2: f64,
    pub strategy: JammerStrategy,
    pub trials: usize,
    pub seed: u64,
}

impl SimConfig {
    /// `M = round(2^(n rate))`, validated to be at least 2 and small enough
    /// to store.
    pub fn message_count(&self) -> Result<usize> {
        let bits = self.n as f64 * self.rate;
        if bits > MAX_RATE_BITS {
            return Err(Error::CodebookTooLarge(format!(
                "n * rate = {bits:.1} bits implies 2^{bits:.1} codewords"
            )));
        }
        let m = bits.exp2().round() as usize;
        if m < 2 {
            return Err(Error::Validation {
                field: "rate".to_string(),
                message: format!("2^(n rate) rounds to {m}, need at least 2 messages"),
            });
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("n", "blocklength must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials", "must be >= 1"));
        }
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda), ("sigma2", self.sigma2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, "must be finite and > 0"));
            }
        }
        self.message_count()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub error_rate: f64,
    /// 95% binomial confidence half-width (normal approximation).
    pub half_width: f64,
    pub errors: usize,
    pub trials: usize,
    pub message_count: usize,
    pub strategy: JammerStrategy,
}

/// `M` codewords drawn uniformly on the sphere of radius `sqrt(n gamma)`.
pub fn gen_codebook(n: usize, m: usize, gamma: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    assert!(m >= 2, "need at least two codewords");
    let target = (n as f64 * gamma).sqrt();
    let mut codebook: Vec<Vec<f64>> = Vec::with_capacity(m);
    while codebook.len() < m {
        let mut x = vec![0.0; n];
        fill_standard_normal(rng, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for v in x.iter_mut() {
            *v *= target / norm;
        }
        if codebook.iter().any(|c| c == &x) {
            continue;
        }
        codebook.push(x);
    }
    codebook
}

/// Index of the codeword nearest to `y`; ties go to the lowest index.
pub fn min_dist_decode(y: &[f64], codebook: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (m, c) in codebook.iter().enumerate() {
        let mut d = 0.0;
        for (yi, ci) in y.iter().zip(c.iter()) {
            let diff = yi - ci;
            d += diff * diff;
        }
        if d < best_dist {
            best_dist = d;
            best = m;
        }
    }
    best
}

/// Draw a state sequence with `||s||^2 <= n lambda`.
pub fn make_state(
    strategy: JammerStrategy,
    codebook: &[Vec<f64>],
    lambda: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = codebook[0].len();
    match strategy {
        JammerStrategy::IidGaussian => {
            let std = (0.99 * lambda).sqrt();
            let cap = n as f64 * lambda;
            loop {
                let mut s = vec![0.0; n];
                fill_standard_normal(rng, &mut s);
                for v in s.iter_mut() {
                    *v *= std;
                }
                if s.iter().map(|v| v * v).sum::<f64>() <= cap {
                    return s;
                }
            }
        }
        JammerStrategy::CodewordMimic => {
            let pick = rng.gen_range(0..codebook.len());
            let mut s = codebook[pick].clone();
            let norm2: f64 = s.iter().map(|v| v * v).sum();
            let target2 = n as f64 * lambda;
            if norm2 > target2 {
                let scale = (target2 / norm2).sqrt();
                for v in s.iter_mut() {
                    *v *= scale;
                }
            }
            s
        }
    }
}

/// Run the link simulation described by `config`.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let m = config.message_count()?;
    let mut cb_rng = derived_rng(config.seed, CODEBOOK_STREAM);
    let codebook = gen_codebook(config.n, m, config.gamma, &mut cb_rng);
    let sigma = config.sigma2.sqrt();

    let run_range = |range: std::ops::Range<usize>| -> usize {
        let mut errors = 0;
        let mut noise = vec![0.0; config.n];
        let mut y = vec![0.0; config.n];
        for trial in range {
            let mut rng = derived_rng(config.seed, trial as u64);
            let msg = rng.gen_range(0..m);
            let state = make_state(config.strategy, &codebook, config.lambda, &mut rng);
            fill_standard_normal(&mut rng, &mut noise);
            for i in 0..config.n {
                y[i] = codebook[msg][i] + state[i] + sigma * noise[i];
            }
            if min_dist_decode(&y, &codebook) != msg {
                errors += 1;
            }
        }
        errors
    };

    // Trials are independent with per-trial RNGs, so chunking over threads
    // cannot change the counts.
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1);
    let workers = workers.min(config.trials).max(1);
    let chunk = config.trials.div_ceil(workers);
    let errors: usize = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(config.trials);
                let run = &run_range;
                scope.spawn(move || run(lo..hi))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
    });

    let p = errors as f64 / config.trials as f64;
    let half_width = 1.96 * (p * (1.0 - p) / config.trials as f64).sqrt();
    Ok(SimReport {
        error_rate: p,
        half_width,
        errors,
        trials: config.trials,
        message_count: m,
        strategy: config.strategy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(strategy: JammerStrategy) -> SimConfig {
        SimConfig {
            n: 64,
            rate: 4.0 / 64.0,
            gamma: 1.0,
            lambda: 1.0,
            sigma2: 0.1,
            strategy,
            trials: 200,
            seed: 7,
        }
    }

    #[test]
    fn codewords_sit_on_the_power_sphere() {
        let mut rng = derived_rng(3, CODEBOOK_STREAM);
        let codebook = gen_codebook(128, 16, 2.0, &mut rng);
        for c in &codebook {
            let power: f64 = c.iter().map(|v| v * v).sum();
            assert!((power - 256.0).abs() < 1e-9, "power {power}");
        }
        for i in 0..codebook.len() {
            for j in (i + 1)..codebook.len() {
                assert_ne!(codebook[i], codebook[j]);
            }
        }
    }

    #[test]
    fn sphere_cross_correlations_concentrate() {
        let mut rng = derived_rng(5, CODEBOOK_STREAM);
        let n = 512;
        let codebook = gen_codebook(n, 8, 1.0, &mut rng);
        let scale = n as f64 * 1.0;
        for i in 0..codebook.len() {
            for j in (i + 1)..codebook.len() {
                let dot: f64 =
                    codebook[i].iter().zip(codebook[j].iter()).map(|(a, b)| a * b).sum();
                assert!((dot / scale).abs() < 0.2, "correlation {}", dot / scale);
            }
        }
    }

    #[test]
    fn decoder_returns_exact_match_and_breaks_ties_low() {
        let codebook = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        assert_eq!(min_dist_decode(&[0.0, 1.0], &codebook), 1);
        // Equidistant from codewords 0 and 2.
        assert_eq!(min_dist_decode(&[0.0, 0.0], &codebook), 0);
        assert_eq!(min_dist_decode(&[-2.0, 0.0], &codebook), 2);
    }

    #[test]
    fn decode_survives_small_noise() {
        let mut rng = derived_rng(9, CODEBOOK_STREAM);
        let codebook = gen_codebook(64, 8, 1.0, &mut rng);
        let y: Vec<f64> = codebook[3].iter().map(|v| v + 1e-6).collect();
        assert_eq!(min_dist_decode(&y, &codebook), 3);
    }

    #[test]
    fn mimic_state_with_equal_budgets_is_a_codeword() {
        let mut rng = derived_rng(1, CODEBOOK_STREAM);
        let codebook = gen_codebook(32, 4, 1.0, &mut rng);
        let mut rng2 = derived_rng(1, 0);
        let s = make_state(JammerStrategy::CodewordMimic, &codebook, 1.0, &mut rng2);
        assert!(codebook.iter().any(|c| c == &s));
    }

    #[test]
    fn mimic_state_rescales_only_downward() {
        let mut rng = derived_rng(1, CODEBOOK_STREAM);
        let n = 32;
        let codebook = gen_codebook(n, 4, 1.0, &mut rng);
        // lambda > gamma: no rescale, power stays n*gamma.
        let mut rng2 = derived_rng(1, 0);
        let s = make_state(JammerStrategy::CodewordMimic, &codebook, 2.0, &mut rng2);
        let p: f64 = s.iter().map(|v| v * v).sum();
        assert!((p - n as f64).abs() < 1e-9);
        // lambda < gamma: rescaled to n*lambda.
        let mut rng3 = derived_rng(1, 0);
        let s = make_state(JammerStrategy::CodewordMimic, &codebook, 0.5, &mut rng3);
        let p: f64 = s.iter().map(|v| v * v).sum();
        assert!((p - n as f64 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn iid_state_respects_power_constraint() {
        let mut rng = derived_rng(1, CODEBOOK_STREAM);
        let n = 64;
        let codebook = gen_codebook(n, 4, 1.0, &mut rng);
        for i in 0..50 {
            let mut rng2 = derived_rng(2, i);
            let s = make_state(JammerStrategy::IidGaussian, &codebook, 0.7, &mut rng2);
            let p: f64 = s.iter().map(|v| v * v).sum();
            assert!(p <= n as f64 * 0.7 + 1e-12);
        }
    }

    #[test]
    fn single_trial_error_rate_is_zero_or_one() {
        let mut cfg = config(JammerStrategy::IidGaussian);
        cfg.trials = 1;
        let report = simulate(&cfg).unwrap();
        assert!(report.error_rate == 0.0 || report.error_rate == 1.0);
    }

    #[test]
    fn identical_configs_reproduce_bit_exactly() {
        let cfg = config(JammerStrategy::CodewordMimic);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_codebook_is_rejected() {
        let mut cfg = config(JammerStrategy::IidGaussian);
        cfg.rate = 0.3;
        cfg.n = 512;
        assert!(matches!(simulate(&cfg), Err(Error::CodebookTooLarge(_))));
    }

    #[test]
    fn tiny_codebook_is_rejected() {
        let mut cfg = config(JammerStrategy::IidGaussian);
        cfg.rate = 1e-9;
        assert!(matches!(
            simulate(&cfg),
            Err(Error::Validation { ref field, .. }) if field == "rate"
        ));
    }
}
