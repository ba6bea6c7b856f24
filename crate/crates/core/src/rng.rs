//! Seeded randomness.
//!
//! Every stochastic step in the crate draws from [`ChaCha8Rng`], which has a
//! documented, platform-independent output stream. Seeds for individual
//! tasks are derived by hashing the master seed together with the task's
//! coordinates, so a task's stream does not depend on scheduling order.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for iteration `iteration` of dataset `label` under `master`.
pub fn derive_seed(master: u64, label: &str, iteration: u64) -> u64 {
    let h = mix64(master ^ fnv1a(label.as_bytes()));
    mix64(h ^ mix64(iteration))
}

/// Combine two seeds into a third, order-sensitive.
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(17))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform index in `[0, n)`.
///
/// Draws from a `u64` range so results do not depend on the platform's
/// pointer width.
pub fn index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    rng.gen_range(0..n as u64) as usize
}

/// Fisher–Yates shuffle using [`index`] draws.
pub fn shuffle<T, R: Rng + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}
