//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by a label,
//! so adding a participant never shifts the draws of another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label.as_bytes()));
    rng
}

pub fn participant_stream(seed: u64, participant_id: &str) -> ChaCha8Rng {
    stream(seed, &format!("participant:{participant_id}"))
}
