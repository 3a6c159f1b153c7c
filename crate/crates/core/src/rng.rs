//! Counter-based random stream derivation.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(root seed, purpose, iteration, index)`. Streams never share state, so the
//! order in which work is scheduled cannot change the numbers a run produces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Joint rollout (env reset + action draws) for one iteration.
    Rollout = 1,
    /// Extra rollouts for the mini-batch surrogate initialization.
    InitBatch = 2,
    /// Initial policy parameters.
    Params = 3,
    /// Uniform pick of the theoretical output iterate.
    Output = 4,
    /// Fixed environment layout (gridworld goals).
    Layout = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes the key into a single 64-bit seed.
pub fn derive_seed(root: u64, purpose: Purpose, iteration: u64, index: u64) -> u64 {
    let mut h = splitmix64(root);
    h = splitmix64(h ^ purpose as u64);
    h = splitmix64(h ^ iteration);
    splitmix64(h ^ index)
}

pub fn stream(root: u64, purpose: Purpose, iteration: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, purpose, iteration, index))
}
