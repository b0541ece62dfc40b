//! Reproducible random streams.
//!
//! Every random quantity in the pipeline is drawn from a [`SeededRng`], a
//! `(seed, stream)` pair backed by ChaCha8. Child streams are derived with
//! [`SeededRng::derive`], so Monte Carlo replication `r` and dictionary
//! replicate `k` get the same draws no matter which thread runs them or in
//! what order.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeededRng {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Child stream identified by `tag`. Distinct tags give independent streams.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ splitmix64(tag.wrapping_add(0xA5A5_A5A5))),
        }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Stream tags used across the crate, kept in one place so they never collide.
pub(crate) mod tags {
    pub const DICTIONARY: u64 = 1;
    pub const SCALING_NOISE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const DESIGN: u64 = 4;
    pub const SUPPORT: u64 = 5;
    pub const SIGNS: u64 = 6;
    pub const CALIBRATION: u64 = 7;
    pub const INSTANCE: u64 = 8;
}

/// `n × q` matrix of independent standard normal draws, filled column by column.
pub fn gaussian_matrix(rng: &SeededRng, n: usize, q: usize) -> DMatrix<f64> {
    let mut gen = rng.generator();
    let data: Vec<f64> = (0..n * q).map(|_| StandardNormal.sample(&mut gen)).collect();
    DMatrix::from_vec(n, q, data)
}

pub fn gaussian_vector(rng: &SeededRng, n: usize) -> DVector<f64> {
    let mut gen = rng.generator();
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut gen)))
}
