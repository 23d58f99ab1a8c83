//! Counter-based stream derivation.
//!
//! Every random stream in a simulation is a `ChaCha8Rng` keyed by a 64-bit
//! seed obtained by folding a path of indices into the master seed:
//!
//! ```text
//! seed(master, [i0, i1, ..]) = mix(.. mix(mix(master, i0), i1) ..)
//! mix(s, i) = splitmix64(s ^ splitmix64(i + 0x9E3779B97F4A7C15))
//! ```
//!
//! Paths used by the crate:
//!
//! | stream                           | path                          |
//! |----------------------------------|-------------------------------|
//! | persistence draw of copy `c`     | `[c, 0]`                      |
//! | walk along axis `k` of copy `c`  | `[c, k]` (k = 1, 2)           |
//! | replicate `r` at size index `j`  | `[j, r]` (gives a run seed)   |
//!
//! The stream for a given path does not depend on how work is scheduled,
//! which is what makes results identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub const PERSISTENCE_ROLE: u64 = 0;
pub const AXIS1_ROLE: u64 = 1;
pub const AXIS2_ROLE: u64 = 2;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &i| mix(s, i))
}

pub fn stream(master: u64, path: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
