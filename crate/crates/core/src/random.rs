//! Counter-based randomness.
//!
//! Every stochastic routine in this crate derives an independent RNG from a
//! `(seed, index)` pair instead of advancing one shared stream. Trial `i` of a
//! simulation therefore sees the same random numbers whether trials run
//! sequentially or in parallel, and reports are bit-identical for a given
//! config.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mix a seed and an index into a fresh generator (SplitMix64 finalizer).
pub fn derived_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Uniform sample from the simplex `{x >= 0, sum x = total}` via normalized
/// exponential spacings.
pub fn uniform_simplex<R: Rng>(rng: &mut R, k: usize, total: f64) -> Vec<f64> {
    let mut spacings: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    let sum: f64 = spacings.iter().sum();
    if sum > 0.0 {
        for s in spacings.iter_mut() {
            // (g/sum)*total so that a single spacing maps to exactly `total`.
            *s = (*s / sum) * total;
        }
    } else {
        // All spacings underflowed to zero; fall back to the barycenter.
        spacings = vec![total / k as f64; k];
    }
    spacings
}

/// Fill `out` with iid standard normal samples (Box-Muller).
pub fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let mut i = 0;
    while i < out.len() {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * u2;
        out[i] = r * phi.cos();
        if i + 1 < out.len() {
            out[i + 1] = r * phi.sin();
        }
        i += 2;
    }
}

/// One standard normal sample.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let mut buf = [0.0];
    fill_standard_normal(rng, &mut buf);
    buf[0]
}
