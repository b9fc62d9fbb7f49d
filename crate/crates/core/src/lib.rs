//! Rank-metric signatures, a code-based identity-based encryption scheme,
//! and the algebraic attacks that break them, runnable at desk scale.

pub mod algebra;
pub mod bilinear;
pub mod codec;
pub mod error;
pub mod hamming;
pub mod ibe;
pub mod lrpc;
pub mod profiles;
pub mod rank_metric;
pub mod ranksign;
pub mod ranksign_attack;
pub mod rsl;

pub use error::{Error, Result};

/// The deterministic generator threaded through every randomized operation.
pub type Rng = rand_chacha::ChaCha20Rng;

/// Seeds the library generator from a 64-bit integer.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
