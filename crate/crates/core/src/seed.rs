//! Counter-based seed derivation.
//!
//! Every parallel task draws its random stream from
//! `derive_seed(master, stream)`, where `stream` is the task's index in a
//! fixed enumeration (restart number, Monte Carlo chunk number, pair index).
//! The mapping is a pair of SplitMix64 finalizer rounds, so results never
//! depend on scheduling or thread count.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of the master seed `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_mul(GOLDEN_GAMMA)))
}
