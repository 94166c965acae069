//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit [`RandomSource`]. Streams are
//! ChaCha8 generators; per-trial streams come from [`RandomSource::child`],
//! which selects one of ChaCha's 2^64 independent streams under the master
//! seed, so the draws a trial sees do not depend on how trials are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::child(seed, 0)
    }

    /// Stream `index` under `master_seed`.
    pub fn child(master_seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(index);
        Self {
            seed: master_seed,
            stream: index,
            rng,
        }
    }

    /// A new source keyed by `(self.seed, self.stream, label)`.
    ///
    /// Does not advance `self`; two calls with the same label return
    /// identical sources.
    pub fn derive(&self, label: u64) -> Self {
        let master = splitmix64(splitmix64(self.seed) ^ self.stream.rotate_left(17));
        Self::child(master, label)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
