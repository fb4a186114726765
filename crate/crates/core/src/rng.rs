//! Per-replication random streams.
//!
//! A stream is a ChaCha8 generator keyed by the master seed, with the
//! stream id selecting one of its 2^64 independent stream positions. Two
//! streams with equal `(master_seed, stream_id)` produce the same sequence
//! regardless of when or on which thread they are created.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids at or above this value are reserved for policy-internal
/// randomness (clustering seeds, clone allocation), so they never collide
/// with replication streams allocated from zero upwards.
pub const AUX_STREAM_BASE: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// An auxiliary stream in the reserved id range.
    pub fn auxiliary(master_seed: u64, index: u64) -> Self {
        Self::new(master_seed, AUX_STREAM_BASE | index)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Same master seed, different stream, starting from the beginning.
    pub fn fork(&self, stream_id: u64) -> Self {
        Self::new(self.master_seed, stream_id)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Derives a per-repeat master seed from a campaign seed (splitmix64 finalizer).
pub fn derive_seed(campaign_seed: u64, index: u64) -> u64 {
    let mut z = campaign_seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
