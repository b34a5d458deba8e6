//! Per-trial RNG streams.
//!
//! Every trial owns a family of ChaCha streams keyed by purpose, so trials can
//! run in any order and the auxiliary draws (`u`, permutations) never share
//! bits with the data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 0,
    Subsample = 1,
    NormDraw = 2,
    Permutation = 3,
    VoteDraw = 4,
    Query = 5,
}

const PURPOSES: u64 = 16;

/// Seed for the `index`-th parameter block of an experiment.
pub fn block_seed(master: u64, index: usize) -> u64 {
    master ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn stream(seed: u64, trial: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * PURPOSES + purpose as u64);
    rng
}
