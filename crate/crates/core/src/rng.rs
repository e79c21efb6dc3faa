//! Seeded random streams.
//!
//! Every virtual source draws from its own position in a ChaCha8
//! keystream: the key comes from the simulation seed, the stream id is the
//! source index and the word position is `image * WORDS_PER_IMAGE`. Any
//! image can therefore be sampled without touching the others, so the
//! result does not depend on sampling order or thread count.
//!
//! Per-item seeds for batch generation are derived with SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit keystream words reserved per image. Each image consumes four
/// `f64` draws (eight words); the rest is headroom.
pub const WORDS_PER_IMAGE: u128 = 16;

/// Word offset of the reflection-count perturbation within an image block.
pub const PERTURBATION_WORD: u128 = 6;

pub fn image_stream(seed: u64, source: usize, image: usize) -> ChaCha8Rng {
    image_stream_at(seed, source, image, 0)
}

pub fn image_stream_at(seed: u64, source: usize, image: usize, word: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(source as u64);
    rng.set_word_pos(image as u128 * WORDS_PER_IMAGE + word);
    rng
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for `(master, a, b)`, e.g. (epoch, item index).
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Seed from OS entropy, for callers that did not pass one.
pub fn entropy_seed() -> u64 {
    rand::random()
}
