//! Reproducible per-trial random streams.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the experiment
//! seed, a stream tag (which regime and change point the observations are
//! for) and the trial index. Two trials never share a stream, and the draws
//! of a trial do not depend on how many other trials ran or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coordinates of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
    pub trial: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64, trial: u64) -> Self {
        Self { seed, stream, trial }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.trial);
        rng
    }
}
