//! Counter-based randomness.
//!
//! Every random decision is addressed by `(seed, purpose, round, index)`.
//! The ChaCha stream is selected from `(purpose, round)` and the point index
//! is the word offset inside that stream, so the uniform drawn for point `i`
//! does not depend on how the index space is split across shards.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a random stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u16)]
pub enum Purpose {
    FirstCenter = 1,
    Sample = 2,
    ExactSample = 3,
    Padding = 4,
    Recluster = 5,
    KMeansPlusPlus = 6,
    Random = 7,
    Partition = 8,
    PartitionShuffle = 9,
    Subsample = 10,
    Generate = 11,
    Experiment = 12,
    Verify = 13,
}

/// Address of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub purpose: Purpose,
    pub round: u32,
}

const WORDS_PER_DRAW: u128 = 2;

impl RngKey {
    pub fn new(seed: u64, purpose: Purpose, round: u32) -> Self {
        Self {
            seed,
            purpose,
            round,
        }
    }

    fn stream_id(&self) -> u64 {
        ((self.purpose as u64) << 32) | u64::from(self.round)
    }

    /// Sequential generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id());
        rng
    }

    /// Cursor yielding the uniforms for indices `start, start + 1, ...`.
    pub fn uniforms_from(&self, start: usize) -> Uniforms {
        let mut rng = self.rng();
        rng.set_word_pos(start as u128 * WORDS_PER_DRAW);
        Uniforms { rng }
    }

    /// The uniform in `[0, 1)` for a single index.
    pub fn uniform_at(&self, index: usize) -> f64 {
        self.uniforms_from(index).next_uniform()
    }

    /// Derives an independent 64-bit seed from this stream.
    pub fn derive_seed(&self) -> u64 {
        self.rng().next_u64()
    }
}

pub struct Uniforms {
    rng: ChaCha8Rng,
}

impl Uniforms {
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        // 53 high bits → [0, 1)
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl Iterator for Uniforms {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(self.next_uniform())
    }
}
