//! Seeded random streams. One master seed yields an independent ChaCha
//! stream per consumer, so adding draws in one consumer never shifts
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids of the per-run consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Population,
    TieBreak,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Population => 1,
            Stream::TieBreak => 2,
        }
    }
}

/// Generator for `stream` of replica `replica` under `seed`.
pub fn substream(seed: u64, stream: Stream, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica.wrapping_mul(16).wrapping_add(stream.id()));
    rng
}
