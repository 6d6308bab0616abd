//! Deterministic substream derivation.
//!
//! Every Monte Carlo sample gets its own PRNG stream derived from the
//! master seed and a textual label. The derivation is SHA-256 over
//! `master_seed (8 bytes little endian) ‖ "/" ‖ label`, and the 32-byte
//! digest is used directly as a ChaCha12 seed. This mapping is part of the
//! output format and must never change: results cite (master seed, label)
//! pairs as their provenance.

use sha2::{Digest, Sha256};

/// Derive the 32-byte PRNG seed for the substream named `label`.
pub fn derive_substream(master_seed: u64, label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(b"/");
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}
