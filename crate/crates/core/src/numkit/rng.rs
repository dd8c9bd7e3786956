//! Seeded random stream.
//!
//! The raw bit source is ChaCha8 (`rand_chacha`), seeded through
//! `SeedableRng::seed_from_u64`. Everything built on top of the raw 64-bit
//! words is implemented here so the derived sequences never depend on the
//! sampling algorithms of a particular `rand` release:
//!
//! - uniform `f64` in `[0, 1)`: top 53 bits of a word times 2^-53;
//! - bounded integers: Lemire's multiply-shift with rejection (unbiased);
//! - Gaussians: Box–Muller, both values of each pair are used;
//! - shuffles: forward Fisher–Yates (`i` from 0, swap with `i + below(n - i)`).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Seed for an independent sub-stream identified by `path`, e.g.
    /// `(master, [fold, proportion, method])`.
    pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
        path.iter()
            .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
    }

    pub fn derive(master: u64, path: &[u64]) -> Self {
        RngStream::new(Self::derive_seed(master, path))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "RngStream::below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            let m = (x as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        self.partial_shuffle(items, items.len());
    }

    /// Moves a uniform random `k`-subset of `items` into `items[..k]`.
    /// Prefixes are stable: with the same stream state, the first `j < k`
    /// entries equal those produced by `partial_shuffle(items, j)`.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        for i in 0..k.min(n.saturating_sub(1)) {
            let j = i + self.below(n - i);
            items.swap(i, j);
        }
    }
}

/// `n` draws from Normal(mean, stddev²).
pub fn gaussian_sample(rng: &mut RngStream, mean: f64, stddev: f64, n: usize) -> Result<Vec<f64>> {
    if stddev < 0.0 || !mean.is_finite() || !stddev.is_finite() {
        return Err(Error::config(format!(
            "gaussian_sample needs finite mean and stddev >= 0, got mean={mean}, stddev={stddev}"
        )));
    }
    Ok((0..n)
        .map(|_| mean + stddev * rng.standard_normal())
        .collect())
}

pub fn seeded_shuffle<T>(rng: &mut RngStream, mut items: Vec<T>) -> Vec<T> {
    rng.shuffle(&mut items);
    items
}
