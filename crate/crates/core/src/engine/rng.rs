//! Per-stream random number generation.
//!
//! Stream key = SHA-256 over the bytes
//! `"minstrel-sim/rng/v1\0" || master_seed (u64 LE) || node (u32 LE) || purpose (UTF-8)`,
//! used as the 256-bit key of ChaCha20 (nonce/stream 0, 64-bit block
//! counter from 0). Uniform `f64` draws take the top 53 bits of the next
//! `u64` output scaled by 2^-53. Both primitives are fixed-width, so streams
//! are identical on every platform and straightforward to regenerate in
//! another language.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::mac::NodeId;

pub type SimRng = ChaCha20Rng;

pub fn rng_stream(master_seed: u64, node: NodeId, purpose: &str) -> SimRng {
    let mut h = Sha256::new();
    h.update(b"minstrel-sim/rng/v1\0");
    h.update(master_seed.to_le_bytes());
    h.update(node.0.to_le_bytes());
    h.update(purpose.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha20Rng::from_seed(key)
}
