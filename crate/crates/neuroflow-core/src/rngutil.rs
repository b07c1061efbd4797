//! Seed derivation for deterministic sub-streams.
//!
//! Every random draw site in the workspace derives its own RNG from the run
//! seed plus a stable label and counter path. Draws are therefore pure
//! functions of the run seed and never depend on scheduling order, which keeps
//! arrivals identical across policies and reruns byte-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Mix a base seed, a label, and counters into a sub-seed.
pub fn derive_seed(base: u64, label: &str, counters: &[u64]) -> u64 {
    let mut s = splitmix64(base ^ fnv1a(label.as_bytes()));
    for &c in counters {
        s = splitmix64(s ^ c);
    }
    s
}

/// Fresh RNG for one labelled draw site.
pub fn sub_rng(base: u64, label: &str, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, counters))
}

/// Stable 64-bit digest of a string, for use as a counter component.
pub fn str_salt(s: &str) -> u64 {
    fnv1a(s.as_bytes())
}
