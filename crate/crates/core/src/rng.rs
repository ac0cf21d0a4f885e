//! Deterministic random streams keyed by `(seed, component)`.
//!
//! Every stochastic stage draws from its own ChaCha stream so results do not
//! depend on the order (or parallel schedule) in which components are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Component identifiers for the stream keying. The low byte space is split by
/// subsystem; callers add their own index (chain, carrier, source) on top.
pub mod stream {
    pub const OFDM: u64 = 1 << 40;
    pub const NOISE: u64 = 2 << 40;
    pub const ORIENTATION: u64 = 3 << 40;
    pub const CANCELLER_INIT: u64 = 4 << 40;
    pub const SGD_BLOCKS: u64 = 5 << 40;
    pub const TEST: u64 = 15 << 40;
}

pub fn keyed(seed: u64, component: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(component);
    rng
}
