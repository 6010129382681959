//! Deterministic substream scheme shared by all samplers.
//!
//! Every random draw is addressed by `(master seed, sample index, lane)`:
//! sample `i` owns ChaCha8 streams `i·width + lane`, with lane 0 reserved for
//! sample-level draws (initial configuration) and lane `1 + j` for electron
//! `j`'s trajectory.  Streams depend only on the address, so batches may be
//! generated on any number of threads in any order and still reproduce the
//! serial run bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Factory handing out independent, reproducible streams.
#[derive(Clone, Copy, Debug)]
pub struct Substreams {
    seed: u64,
    /// Streams reserved per sample; at least 1.
    width: u64,
}

impl Substreams {
    /// `width` must cover every lane a sample will request (`1 + n_electrons`
    /// for bundle sampling).
    pub fn new(seed: u64, width: u64) -> Self {
        assert!(width >= 1, "stream width must be positive");
        Self { seed, width }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    /// Stream for `(sample, lane)`; panics if the lane is out of range.
    pub fn stream(&self, sample: u64, lane: u64) -> ChaCha8Rng {
        assert!(lane < self.width, "lane {lane} outside width {}", self.width);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample.wrapping_mul(self.width).wrapping_add(lane));
        rng
    }
}
