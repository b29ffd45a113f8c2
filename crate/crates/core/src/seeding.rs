//! Splittable seed derivation.
//!
//! A child seed is obtained by folding each coordinate into the parent with
//! SplitMix64: `h ← splitmix64(h ^ splitmix64(coord + i·γ))`, where `γ` is
//! the golden-ratio increment and `i` the coordinate position. The result
//! depends only on the parent seed and the coordinate list.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .enumerate()
        .fold(splitmix64(parent), |h, (i, &c)| {
            splitmix64(h ^ splitmix64(c.wrapping_add((i as u64).wrapping_mul(GOLDEN_GAMMA))))
        })
}
