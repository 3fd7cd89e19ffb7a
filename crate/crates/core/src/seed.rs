//! Counter-based seed splitting.
//!
//! Every random stream is a ChaCha8 generator keyed by the run seed and
//! selected by a stream number. Snapshot `i` always draws from stream `i`,
//! so results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for the trajectory shadowing sequence.
pub const SHADOW_STREAM: u64 = u64::MAX;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
