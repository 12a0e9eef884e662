//! Named random substreams derived from a single 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Hashes `seed` and a path of labels into a 32-byte ChaCha key.
pub fn stream_key(seed: u64, path: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"mgsim-stream-v1");
    hasher.update(seed.to_le_bytes());
    for part in path {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hasher.finalize().into()
}

pub fn stream(seed: u64, path: &[&str]) -> StreamRng {
    ChaCha8Rng::from_seed(stream_key(seed, path))
}

/// A derived 64-bit seed, used where a whole run needs its own root seed.
pub fn derive_seed(seed: u64, path: &[&str]) -> u64 {
    let key = stream_key(seed, path);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}
