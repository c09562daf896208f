//! Seed derivation.
//!
//! Every random component of a run draws from its own ChaCha stream keyed by
//! `(master_seed, component, index)`, so swapping e.g. the buffer policy never
//! shifts the random numbers seen by the stream generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit seed for a named component of a run.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    derive_indexed_seed(master, component, 0)
}

pub fn derive_indexed_seed(master: u64, component: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((component.len() as u64).to_le_bytes());
    h.update(component.as_bytes());
    h.update(index.to_le_bytes());
    let out = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&out[..8]);
    u64::from_le_bytes(bytes)
}

pub fn component_rng(master: u64, component: &str) -> SeededRng {
    seeded(derive_seed(master, component))
}

pub fn indexed_rng(master: u64, component: &str, index: u64) -> SeededRng {
    seeded(derive_indexed_seed(master, component, index))
}
