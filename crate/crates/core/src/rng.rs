//! Counter-based random streams.
//!
//! Every Monte Carlo path draws from its own ChaCha8 stream keyed by
//! `(master_seed, stream_id)`. ChaCha is a counter-mode generator, so the
//! stream for path `i` does not depend on how many other paths were drawn
//! before it or on which worker thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream handle passed explicitly to every sampler.
pub type Stream = ChaCha8Rng;

/// Derives the stream for `stream_id` under `master_seed`.
pub fn stream(master_seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}
