//! Deterministic per-concern random streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed stream labels; enabling or disabling one concern never reshuffles another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Shadow = 0x5348,
    Fading = 0x4641,
    Crc = 0x4352,
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
