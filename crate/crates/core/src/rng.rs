//! Seed derivation and the crate-wide random generator.
//!
//! All randomness flows through [`SimRng`], a ChaCha8 stream cipher
//! generator. Its output is fixed by its algorithm, so a given seed produces
//! the same stream on every platform. Independent streams (one per genome
//! trajectory, per planted outlier, per null sample) are keyed by hashing a
//! master seed together with a label using SHA-256.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Derive a 64-bit seed from `master` and a textual label.
///
/// The first eight bytes of `SHA-256(master.to_le_bytes() || label)`,
/// read little-endian.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Generator seeded directly from a 64-bit value.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the stream identified by `(master, label)`.
pub fn stream(master: u64, label: &str) -> SimRng {
    rng_from_seed(derive_seed(master, label))
}
