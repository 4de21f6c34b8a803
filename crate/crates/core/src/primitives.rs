//! Numeric primitives and the seeded randomness contract shared by every
//! learner and environment.
//!
//! A [`RandomSource`] is identified by a 64-bit seed and a text label. The
//! label selects one of 2^64 independent ChaCha8 streams, so two sources with
//! the same `(seed, label)` produce identical draws no matter which thread or
//! in which order they are created.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Usage(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Compile-time constructor for intervals known to be valid.
    pub(crate) const fn new_unchecked(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Affine map from `[0, 1]` onto this interval.
    pub fn from_unit(&self, u: f64) -> f64 {
        self.lo + u * (self.hi - self.lo)
    }
}

/// Projection onto `iv`: `min(max(x, lo), hi)`.
#[inline]
pub fn project(x: f64, iv: Interval) -> f64 {
    x.max(iv.lo).min(iv.hi)
}

/// Index of the largest value, ties going to the lowest index.
pub fn argmax_first(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::Usage("argmax of an empty list".into()));
    }
    Ok(argmax_first_unchecked(values))
}

#[inline]
pub(crate) fn argmax_first_unchecked(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Deterministic random stream keyed by `(seed, label)`.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a64(label.as_bytes()));
        RandomSource { rng }
    }

    /// A child stream whose label extends this one's; used when one owner
    /// needs several independent purposes.
    pub fn derive(seed: u64, parent: &str, child: &str) -> Self {
        Self::new(seed, &format!("{parent}/{child}"))
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal draw.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Normal draw with the given mean and standard deviation.
    #[inline]
    pub fn gaussian(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.normal()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Categorical draw with probabilities `weights` (assumed normalized).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // Rounding left `acc` slightly below 1; fall back to the last
        // index that carries mass.
        weights
            .iter()
            .rposition(|&w| w > 0.0)
            .unwrap_or(weights.len() - 1)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
