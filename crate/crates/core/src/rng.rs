//! Counter-based random streams.
//!
//! Every random draw in an estimation run comes from a ChaCha8 stream keyed
//! by `(seed, purpose, a, b)` with the particle (or replication) index as the
//! stream id. Work can therefore be split across any number of threads
//! without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; part of the key so purposes never collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    PriorInit = 1,
    Resample = 2,
    Mutation = 3,
    Simulate = 4,
    Candidate = 5,
    Replication = 6,
    Estimate = 7,
}

/// Opens the stream for `(seed, purpose, a, b)` and selects sub-stream `index`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derives an independent 64-bit seed (SplitMix64 finaliser over the inputs).
pub fn derive_seed(master: u64, purpose: Purpose, index: u64) -> u64 {
    let mut z = master
        .wrapping_add((purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
