use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::Matrix;
use crate::error::{Error, Result};

/// Stream identifiers for the independent consumers of randomness.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const CORRUPTION: u64 = 5;
    pub const GENERATE: u64 = 6;
    pub const CLASSIFIER: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const DATA: u64 = 9;
    pub const TRAIN: u64 = 10;
    pub const COMPARE: u64 = 11;
    pub const FOLD: u64 = 12;
}

/// Seeded xoshiro256++ generator.
///
/// The 256-bit state is expanded from a 64-bit seed with SplitMix64 (the
/// reference seeding procedure for the xoshiro family). Child streams are
/// derived from the seed and a stream id only, so they do not depend on how
/// many values the parent has already produced.
///
/// Uniform doubles take the top 53 bits of a 64-bit output. Gaussian draws use
/// the Box-Muller transform on pairs of uniforms, so results are identical on
/// every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child generator for `stream`. Pure in `(seed, stream)`.
    pub fn derive(&self, stream: u64) -> Rng {
        Rng::new(splitmix64(
            self.seed ^ splitmix64(stream.wrapping_add(0xD1B5_4A32_D192_ED03)),
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by rejection, unbiased.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Pair of independent standard normals (Box-Muller).
    pub fn standard_normal_pair(&mut self) -> (f64, f64) {
        // 1 - u lies in (0, 1], keeping ln finite
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (radius * theta.cos(), radius * theta.sin())
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize, mean: f64, stddev: f64) -> Result<Matrix> {
        if !(stddev >= 0.0) || !stddev.is_finite() || !mean.is_finite() {
            return Err(Error::Param(format!(
                "gaussian needs finite mean and stddev >= 0, got mean {mean}, stddev {stddev}"
            )));
        }
        let n = rows * cols;
        let mut data = Vec::with_capacity(n + 1);
        while data.len() < n {
            let (a, b) = self.standard_normal_pair();
            data.push(mean + stddev * a);
            data.push(mean + stddev * b);
        }
        data.truncate(n);
        Matrix::from_vec(rows, cols, data)
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Param(format!("uniform needs finite lo <= hi, got [{lo}, {hi})")));
        }
        let width = hi - lo;
        let data = (0..rows * cols).map(|_| lo + width * self.next_f64()).collect();
        Matrix::from_vec(rows, cols, data)
    }
}

/// i.i.d. normal entries.
pub fn sample_gaussian(rng: &mut Rng, rows: usize, cols: usize, mean: f64, stddev: f64) -> Result<Matrix> {
    rng.gaussian_matrix(rows, cols, mean, stddev)
}

/// i.i.d. uniform entries in `[lo, hi)`.
pub fn sample_uniform(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
    rng.uniform_matrix(rows, cols, lo, hi)
}
