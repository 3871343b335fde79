//! Seed derivation for reproducible Monte Carlo.
//!
//! Every replicate draws from its own ChaCha8 stream: the generator is keyed by
//! the master seed and the stream id is `(purpose << 48) | replicate`. Streams
//! for different purposes (finite-sample data, limit-law draws, ...) never
//! overlap, and any replicate can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    FiniteSample = 1,
    LimitLaw = 2,
    Experiment = 3,
}

pub fn replicate_rng(seed: u64, purpose: StreamPurpose, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | replicate as u64);
    rng
}
