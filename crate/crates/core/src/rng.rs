//! Seedable, stream-splittable randomness.
//!
//! Every consumer asks the master seed for a named substream. A substream is
//! a ChaCha8 generator keyed by `(master_seed, label)` with the ChaCha stream
//! id set to the caller's index, so the sequence it produces depends on
//! nothing but those three values. Trials can therefore be scheduled on any
//! number of workers, in any order, and still draw identical numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use rand_chacha::ChaCha8Rng as StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed {
    pub master_seed: u64,
}

impl RngSeed {
    pub const fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent generator for `(label, index)`.
    pub fn stream(&self, label: &str, index: u64) -> StreamRng {
        let mut state = self.master_seed ^ fnv1a(label.as_bytes());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(master_seed: u64) -> Self {
        Self { master_seed }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
