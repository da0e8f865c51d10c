//! Per-run seed derivation.
//!
//! Every run gets its own 64-bit seed: the first eight bytes
//! (little-endian) of
//!
//! ```text
//! SHA-256("mail-lab/run/v1" || master_seed || seed || budget || algorithm)
//! ```
//!
//! with the three integers encoded as little-endian `u64` and the algorithm
//! name as UTF-8. The core library expands that seed into a ChaCha8 stream
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`), so the streams are
//! reproducible from any language with SHA-256 and ChaCha8.

use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"mail-lab/run/v1";

pub fn run_seed(master_seed: u64, seed: u64, budget: usize, algorithm: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(master_seed.to_le_bytes());
    h.update(seed.to_le_bytes());
    h.update((budget as u64).to_le_bytes());
    h.update(algorithm.as_bytes());
    let digest = h.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}
