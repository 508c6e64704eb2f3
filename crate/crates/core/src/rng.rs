//! Counter-based randomness: every draw is addressed by
//! `(master seed, purpose, sample index, position)` so that results never
//! depend on evaluation order or on how work is split across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Independent families of draws derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Capacity = 1,
    Fresh = 2,
    Threshold = 3,
    Penalty = 4,
    VertexWeight = 5,
    Resample = 6,
    Pilot = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A positioned stream of 64-bit words.
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, purpose: Purpose, sample_index: u64) -> Self {
        let key = splitmix64(seed ^ splitmix64(purpose as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(sample_index);
        Stream { rng }
    }

    /// The word at `position`, independent of any earlier reads.
    pub fn word_at(&mut self, position: u64) -> u64 {
        self.rng.set_word_pos(2 * position as u128);
        self.rng.next_u64()
    }

    /// Sequential read; `position` advances by one word per call.
    pub fn next_word(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn seek(&mut self, position: u64) {
        self.rng.set_word_pos(2 * position as u128);
    }
}

/// `true` with probability `num/den`, decided from one uniform word.
#[inline]
pub fn bernoulli(word: u64, num: u64, den: u64) -> bool {
    ((word as u128 * den as u128) >> 64) < num as u128
}

/// Uniform word interpreted as a point of `[0,1)`; compared exactly with `num/den`.
#[inline]
pub fn below_ratio(word: u64, num: u64, den: u64) -> bool {
    (word as u128) * (den as u128) < (num as u128) << 64
}
