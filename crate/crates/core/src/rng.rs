//! Seed handling. Every consumer of randomness gets its own ChaCha stream
//! derived from the single run seed, so adding draws in one consumer never
//! shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids handed out to the consumers inside a run.
pub mod streams {
    pub const SAMPLER: u64 = 1;
    pub const PCA_JITTER: u64 = 2;
    pub const SELECTION: u64 = 3;
    /// Sampler restarts use `RESTART_BASE + restart_count`.
    pub const RESTART_BASE: u64 = 1 << 32;
}

/// Counter-based split: same key, different stream.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
