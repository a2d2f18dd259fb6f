//! Deterministic seed derivation.
//!
//! Every randomized routine in the crate draws from a ChaCha stream seeded by
//! mixing a root seed with structural tags (pair indices, replication number,
//! iteration, ...). Results therefore depend only on the root seed and the
//! work item, never on thread schedule or evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-avalanche mix of one 64-bit word.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a list of tags.
pub fn derive(root: u64, tags: &[u64]) -> u64 {
    let mut acc = mix64(root);
    for &t in tags {
        acc = mix64(acc ^ mix64(t));
    }
    acc
}

/// ChaCha stream for a derived seed.
pub fn rng(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, tags))
}

// Domain tags keep unrelated consumers of the same root seed on disjoint streams.
pub const TAG_BOOT: u64 = 1;
pub const TAG_MATRIX: u64 = 2;
pub const TAG_KMEANS_INIT: u64 = 3;
pub const TAG_KMEANS_DIST: u64 = 4;
pub const TAG_KMEANS_FINAL: u64 = 5;
pub const TAG_RANK: u64 = 6;
pub const TAG_RANK_GROUP: u64 = 7;
pub const TAG_REFINE: u64 = 8;
pub const TAG_DBI: u64 = 9;
pub const TAG_SELECT_K: u64 = 10;
pub const TAG_DRAW: u64 = 11;
