//! Reproducible random streams.
//!
//! [`SeededRng`] wraps ChaCha20 (the `rand_chacha` implementation). The
//! generator is counter based: a 64-bit stream id selects an independent
//! keystream for the same key. Substream `i` of a generator with seed `s` is
//! keyed by the first word of stream `i + 1` under `s`, so it depends on
//! `(s, i)` only and can itself be split again.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator determined by `(self.seed(), index)`; the state of
    /// `self` is not consulted or advanced.
    pub fn substream(&self, index: u64) -> SeededRng {
        let mut keyed = ChaCha20Rng::seed_from_u64(self.seed);
        keyed.set_stream(index.wrapping_add(1));
        SeededRng::new(keyed.next_u64())
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
