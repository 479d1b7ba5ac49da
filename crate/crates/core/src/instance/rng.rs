use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for matrix generation within a trial.
pub const STREAM_MATRIX: u64 = 0;
/// Stream used for signal generation within a trial.
pub const STREAM_SIGNAL: u64 = 1;
/// Stream used for the per-sweep graph reshuffles of the density-evolution run.
pub const STREAM_SHUFFLE: u64 = 2;

/// A `(seed, stream)` pair naming one independent ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One round of the SplitMix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
