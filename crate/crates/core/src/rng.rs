//! Deterministic random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator seeded by
//! mixing a user seed with a tuple of integer tags (stage, cycle, particle, …).
//! Results therefore do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with `tags` into a 64-bit stream key.
pub fn stream_key(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x5851_F42D_4C95_7F2D);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x2545_F491_4F6C_DD1D)));
    }
    h
}

pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, tags))
}

/// Tag namespaces so unrelated consumers of one seed never share a stream.
pub mod tags {
    pub const SYNTH: u64 = 1;
    pub const PRIOR: u64 = 2;
    pub const RESAMPLE: u64 = 3;
    pub const MOVE: u64 = 4;
    pub const SUBSAMPLE: u64 = 5;
    pub const RESTART: u64 = 6;
}
