//! Seeded random streams.
//!
//! One global seed drives every component; each component draws from its own
//! ChaCha stream so adding a consumer never shifts another consumer's numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream identifiers. Values are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Probe = 1,
    PowerIteration = 2,
    Secant = 3,
    Noise = 4,
    Perturbation = 5,
    Init = 6,
    Batch = 7,
    Penalty = 8,
    Fixture = 9,
    Audit = 10,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    stream_indexed(seed, which, 0)
}

/// Stream with an extra index, e.g. one per regpath level or training step.
pub fn stream_indexed(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(which as u64);
    rng
}

pub fn gaussian_vec<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}
