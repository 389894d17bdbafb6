//! Counter-based seed derivation.
//!
//! Trials are seeded by mixing a master seed with a small integer path
//! (stream tag, grid coordinates, trial index). Trials can then run in any
//! order, on any number of workers, and still reproduce bit-identically.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a full-avalanche 64-bit mixer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of integers.
///
/// The same `(master, path)` pair always yields the same seed; distinct
/// paths yield statistically independent streams.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    let mut state = mix(master.wrapping_add(GAMMA));
    for &part in path {
        state = mix(state ^ part.wrapping_mul(0xff51_afd7_ed55_8ccd).wrapping_add(GAMMA));
    }
    state
}
