//! Seeded random streams.
//!
//! Every run derives its randomness from one 64-bit master seed. Each trial
//! and each noise source gets its own ChaCha stream so that any one source can
//! be frozen while the others vary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Tree and channel generation.
    Problem,
    /// Corruption of labels by the noise model.
    OracleNoise,
    /// Success/failure draws inside emulated quantum subroutines.
    EstimationNoise,
    /// Internal choices of the learner.
    Algorithm,
}

impl Stream {
    pub const ALL: [Stream; 4] = [
        Stream::Problem,
        Stream::OracleNoise,
        Stream::EstimationNoise,
        Stream::Algorithm,
    ];

    fn id(self) -> u64 {
        match self {
            Stream::Problem => 1,
            Stream::OracleNoise => 2,
            Stream::EstimationNoise => 3,
            Stream::Algorithm => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stream::Problem => "problem",
            Stream::OracleNoise => "oracle-noise",
            Stream::EstimationNoise => "estimation-noise",
            Stream::Algorithm => "algorithm",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// The named substream of a trial seed.
pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// All four substreams of one trial.
#[derive(Debug, Clone)]
pub struct Streams {
    pub problem: Rng,
    pub oracle_noise: Rng,
    pub estimation_noise: Rng,
    pub algorithm: Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self {
            problem: stream(seed, Stream::Problem),
            oracle_noise: stream(seed, Stream::OracleNoise),
            estimation_noise: stream(seed, Stream::EstimationNoise),
            algorithm: stream(seed, Stream::Algorithm),
        }
    }
}
