//! Per-sample random streams.
//!
//! Sample `i` of a run seeded with `master_seed` always draws from the same
//! ChaCha8 stream, whatever thread evaluates it: the key is a SplitMix64
//! hash of the master seed and the 64-bit stream id is the sample index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default master seed for runs that do not choose one.
pub const DEFAULT_SEED: u64 = 0x005E_ED0F_B10B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngContract {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl RngContract {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        RngContract {
            master_seed,
            sample_index,
        }
    }

    /// The contract of another sample under the same master seed.
    pub fn at(self, sample_index: u64) -> Self {
        RngContract { sample_index, ..self }
    }

    pub fn stream(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.sample_index);
        rng
    }
}

/// Derives an independent master seed for a labelled sub-run (for example
/// the per-winding estimates of a covering-sum check).
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    let mut state = master_seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(&mut state)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
