//! Named random sub-streams derived from one 64-bit experiment seed.
//!
//! Every consumer of randomness (fold assignment, weight init, dropout,
//! minibatch sampling, bootstrap, data generation) asks for its own stream
//! by name and index, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const FOLDS: &str = "folds";
pub const INIT: &str = "init";
pub const DROPOUT: &str = "dropout";
pub const SAMPLING: &str = "sampling";
pub const BOOTSTRAP: &str = "bootstrap";
pub const SYNTH: &str = "synth";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the seed of sub-stream `(name, index)` from `seed`.
pub fn derive(seed: u64, name: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(name)) ^ splitmix64(index.wrapping_add(0x5851_F42D)))
}

pub fn stream(seed: u64, name: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(seed, name, index))
}
