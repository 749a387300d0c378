//! Seeded random streams.
//!
//! Every stochastic component draws from a [`SeededRng`]: a ChaCha8 stream
//! whose full state (seed, stream id, word position) can be captured as 56
//! bytes and restored, so interrupted runs resume on the exact same draws.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const RNG_STATE_BYTES: usize = 56;

/// Independent streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    GeneratorInit = 1,
    DiscriminatorInit = 2,
    ClassifierInit = 3,
    Latent = 4,
    Evaluation = 5,
    Data = 6,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        SeededRng { inner }
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn state_bytes(&self) -> [u8; RNG_STATE_BYTES] {
        let mut out = [0u8; RNG_STATE_BYTES];
        out[..32].copy_from_slice(&self.inner.get_seed());
        out[32..40].copy_from_slice(&self.inner.get_stream().to_le_bytes());
        out[40..].copy_from_slice(&self.inner.get_word_pos().to_le_bytes());
        out
    }

    pub fn from_state_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != RNG_STATE_BYTES {
            return Err(Error::Checkpoint(format!(
                "rng state must be {RNG_STATE_BYTES} bytes, got {}",
                bytes.len()
            )));
        }
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&bytes[..32]);
        let stream = u64::from_le_bytes(bytes[32..40].try_into().unwrap());
        let pos = u128::from_le_bytes(bytes[40..].try_into().unwrap());
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(stream);
        inner.set_word_pos(pos);
        Ok(SeededRng { inner })
    }
}
