//! Addressable random streams.
//!
//! An [`RngStream`] is a pair `(seed, stream_id)` rather than a stateful
//! generator. Every consumer asks the stream for a fresh generator, so the same
//! address always replays the same draws no matter which worker or in which
//! order it is used. Hierarchical layouts (run -> purpose -> step) are built
//! with [`RngStream::child`].
//!
//! The generator behind a stream is ChaCha8, which is counter based and has a
//! native 64-bit stream selector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Address of a reproducible random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derives a nested stream. The parent's `(seed, stream_id)` is hashed
    /// into the child's seed and `index` becomes the child's stream id, so
    /// children of distinct parents never share an address.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: self.derive_seed(),
            stream_id: index,
        }
    }

    /// A 64-bit seed unique to this address, for APIs that take a plain seed.
    pub fn derive_seed(&self) -> u64 {
        splitmix64(splitmix64(self.seed) ^ self.stream_id.wrapping_mul(GOLDEN_GAMMA))
    }

    /// A generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
