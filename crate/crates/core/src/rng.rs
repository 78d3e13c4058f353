//! Counter-based random streams.
//!
//! A stream is identified by a global seed and a short tuple of integers
//! (purpose, step, particle index, ...). The ChaCha key is derived by hashing
//! both, so the draws a particle sees never depend on which worker thread
//! runs it or in which order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream purposes used across the crate. Keeping them in one place avoids
/// two subsystems accidentally sharing a stream.
pub mod purpose {
    pub const DATA: u64 = 1;
    pub const PRIOR: u64 = 2;
    pub const INIT_SIM: u64 = 3;
    pub const RESAMPLE: u64 = 4;
    pub const MIXTURE: u64 = 5;
    pub const KERNEL: u64 = 6;
    pub const SUBSAMPLE: u64 = 7;
    pub const MH: u64 = 8;
    pub const REFERENCE: u64 = 9;
    pub const BENCH: u64 = 10;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: Vec<u64>,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: &[u64]) -> Self {
        let mut h = splitmix64(seed ^ 0x5EED_0000_0000_0001);
        for (pos, id) in stream_id.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(id.wrapping_add((pos as u64 + 1) << 56)));
        }
        // length is folded in so (a) and (a, 0) differ
        h = splitmix64(h ^ stream_id.len() as u64);
        let mut key = [0u8; 32];
        let mut state = h;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self {
            seed,
            stream_id: stream_id.to_vec(),
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> &[u64] {
        &self.stream_id
    }

    /// A child stream whose id extends this one.
    pub fn derive(&self, extra: &[u64]) -> Self {
        let mut id = self.stream_id.clone();
        id.extend_from_slice(extra);
        Self::new(self.seed, &id)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
