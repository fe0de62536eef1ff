//! Deterministic seed derivation.
//!
//! Every randomized stage (synthetic generation, masking, shuffling, weight
//! init, fold splitting) owns a [`rand_chacha::ChaCha8Rng`] seeded through
//! [`derive_seed`] from one run-level seed plus a stream index. Workers
//! derive disjoint streams from (seed, index), so results are identical
//! whether stages run serially or in parallel.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby (seed, stream) pairs.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive an independent sub-seed for stream `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

/// Seeded generator for stream `index` of run `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}
