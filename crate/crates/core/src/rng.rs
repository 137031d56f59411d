//! Random streams. Every simulation records [`ALGORITHM`] and its seed so a run
//! can be replayed bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// ChaCha with 8 rounds, key expanded from the seed by `seed_from_u64`,
/// replica `r` on stream `r`.
pub const ALGORITHM: &str = "chacha8 (rand_chacha 0.3, seed_from_u64, stream=replica)";

pub fn stream(seed: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}
