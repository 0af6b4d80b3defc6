//! Counter-based random streams.
//!
//! Every trial draws from its own ChaCha stream addressed by
//! `(master seed, domain, index)`. Streams never overlap, so results depend
//! only on the trial index and not on how trials are scheduled across
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent purposes that draw from the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Domain {
    /// Displacement trials (rightmost particle, maxima, ancestry).
    Trial = 1,
    /// Fresh Galton-Watson runs for the martingale limit `W`.
    Martingale = 2,
    /// Short runs estimating survival probabilities in the `zeta` series.
    Zeta = 3,
    /// Bootstrap resampling.
    Bootstrap = 4,
}

const INDEX_BITS: u32 = 48;

/// The stream for one `(domain, index)` pair under `master_seed`.
pub fn stream(master_seed: u64, domain: Domain, index: u64) -> StreamRng {
    assert!(index < 1 << INDEX_BITS, "stream index {index} out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((domain as u64) << INDEX_BITS) | index);
    rng
}
