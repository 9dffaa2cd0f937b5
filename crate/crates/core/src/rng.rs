//! Named, seedable random streams.
//!
//! Every stochastic stage draws from a ChaCha20 generator whose 256-bit key is
//! derived from `(run_seed, stream_name, index)`. The derivation uses FNV-1a
//! over the stream name and SplitMix64 mixing, so a given triple yields the
//! same stream on every platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use rand_chacha::ChaCha20Rng as StreamRng;

/// Stream used by k-means seeding during coarsening.
pub const KMEANS: &str = "coarsen.kmeans";
/// Stream used to draw random balanced starts for screening.
pub const SCREEN: &str = "coarsen.screen";
/// Stream used for measurement sampling.
pub const SAMPLE: &str = "qaoa.sample";
/// Stream used for random FM starts.
pub const FM_SHUFFLE: &str = "fm.shuffle";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive a child seed; used to give nested stages (e.g. one dissection
    /// block) their own independent family of streams.
    pub fn child(&self, name: &str, index: u64) -> SeedStream {
        let mut state = self.seed ^ fnv1a(name.as_bytes()).rotate_left(17) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        SeedStream::new(splitmix64(&mut state))
    }

    /// Generator for stream `name` at position `index`.
    pub fn rng(&self, name: &str, index: u64) -> ChaCha20Rng {
        let mut state = self.seed;
        let name_hash = fnv1a(name.as_bytes());
        let mut key = [0u8; 32];
        let words = [
            splitmix64(&mut state),
            splitmix64(&mut state) ^ name_hash,
            splitmix64(&mut state) ^ index,
            splitmix64(&mut state) ^ name_hash.rotate_left(32) ^ index.rotate_left(7),
        ];
        let mut mix = words.iter().fold(0u64, |acc, w| acc ^ w);
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            let v = w ^ splitmix64(&mut mix);
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        ChaCha20Rng::from_seed(key)
    }
}
