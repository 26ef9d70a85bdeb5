//! Counter-based random streams.
//!
//! Every draw is addressed by `(master seed, stream id, index)`: the master
//! seed keys a ChaCha8 cipher, the stream id selects the ChaCha stream and the
//! index selects a disjoint block of the keystream. Path `i` therefore sees
//! the same numbers no matter which worker produces it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for the simulated driving paths.
pub const PATH_STREAM: u64 = 1;
/// Stream for the fresh path copy used by reference-law sampling (`u₁`).
pub const REFERENCE_PATH_STREAM: u64 = 2;
/// Stream for the independent Gaussian factor `Z` of the limit law.
pub const REFERENCE_Z_STREAM: u64 = 3;
/// Stream for generic self-tests.
pub const AUX_STREAM: u64 = 4;

/// Words of keystream reserved for one index (2³² 32-bit words).
const WORDS_PER_INDEX_SHIFT: u32 = 32;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Generator positioned at the start of block `index` of `stream`.
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(seed));
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << WORDS_PER_INDEX_SHIFT);
    rng
}
