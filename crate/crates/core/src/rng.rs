//! Deterministic random-stream derivation.
//!
//! Every independent unit of work (a scene index, a question slot, the
//! balancing pass) gets its own stream derived from the master seed and a tag
//! path. Streams are stable across platforms and worker counts because the
//! generator algorithm is fixed and no ambient randomness is consulted.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Top-level stream tags. Keeping these distinct keeps the scene sampler,
/// question search, text realization, and balancing decisions independent.
pub mod stream {
    pub const SCENE: u64 = 0x5343;
    pub const QUESTION: u64 = 0x5155;
    pub const TEXT: u64 = 0x5445;
    pub const BALANCE: u64 = 0x4241;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a generator from `master_seed` and a path of tags.
///
/// Identical `(master_seed, tags)` pairs yield identical streams; differing
/// paths yield streams that are independent for all practical purposes.
pub fn derive(master_seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = master_seed ^ 0xA076_1D64_78BD_642F;
    let mut acc = splitmix64(&mut state);
    for &tag in tags {
        state ^= tag.wrapping_mul(0xE703_7ED1_A0B4_28DB);
        acc = splitmix64(&mut state) ^ acc.rotate_left(23);
    }
    let mut key = [0u8; 32];
    let mut ks = acc;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut ks).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
