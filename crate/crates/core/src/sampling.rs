use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded uniform sampler over an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
    pub seed: u64,
}

impl Sampler {
    pub const DEFAULT_COUNT: usize = 64;
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(lo: Vec<f64>, hi: Vec<f64>, count: usize, seed: u64) -> Result<Self> {
        let s = Self {
            lo,
            hi,
            count,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// The box `[lo, hi]^dim` with default count and seed.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
            count: Self::DEFAULT_COUNT,
            seed: Self::DEFAULT_SEED,
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::Config(format!(
                "sampler box has {} lower and {} upper bounds",
                self.lo.len(),
                self.hi.len()
            )));
        }
        if self.count == 0 {
            return Err(Error::Config("sampler count must be at least 1".into()));
        }
        for (axis, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "sampler axis {axis}: need lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect()
    }

    /// Sampler on the product box `self × other`, keeping this seed and count.
    pub fn product(&self, other: &Sampler) -> Sampler {
        Sampler {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
            count: self.count,
            seed: self.seed,
        }
    }

    /// Restriction to the first `k` axes.
    pub fn leading(&self, k: usize) -> Sampler {
        Sampler {
            lo: self.lo[..k].to_vec(),
            hi: self.hi[..k].to_vec(),
            count: self.count,
            seed: self.seed,
        }
    }
}
