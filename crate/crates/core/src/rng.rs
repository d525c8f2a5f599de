//! Seeded random streams.
//!
//! Every consumer derives its own ChaCha stream from the master seed, so
//! adding draws in one place never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Sampler = 1,
    Generator = 2,
    Corpus = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
