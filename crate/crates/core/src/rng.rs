//! Deterministic random streams.
//!
//! All randomness goes through ChaCha8 with an explicit 64-bit stream id, so
//! independent tasks (matrix draws, replicates) get non-overlapping streams
//! that do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator family recorded in experiment metadata.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng (seed_from_u64 + set_stream)";

pub type StreamRng = ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Pack a task key into a stream id: 16 bits of purpose, 24 bits each of
/// matrix and replicate index.
pub fn stream_id(purpose: u16, matrix: u32, replicate: u32) -> u64 {
    debug_assert!(matrix < (1 << 24) && replicate < (1 << 24));
    ((purpose as u64) << 48) | (((matrix as u64) & 0xFF_FFFF) << 24) | ((replicate as u64) & 0xFF_FFFF)
}
