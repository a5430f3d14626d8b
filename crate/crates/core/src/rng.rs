//! Seeded, stream-addressable random number generation.
//!
//! Every stochastic operation takes an [`RngStreamSpec`]. A spec maps to a
//! ChaCha8 generator keyed by the master seed, with the stream index placed in
//! ChaCha's 64-bit stream counter, so distinct indices give non-overlapping
//! keystreams and results do not depend on platform or thread layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStreamSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStreamSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    pub const fn with_stream(&self, stream_index: u64) -> Self {
        Self::new(self.master_seed, stream_index)
    }

    /// A spec for a separate purpose (e.g. lazy stream extension) that stays
    /// tied to this one but never collides with it.
    pub fn derived(&self, tag: u64) -> Self {
        Self::new(splitmix64(self.master_seed ^ splitmix64(tag)), self.stream_index)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
