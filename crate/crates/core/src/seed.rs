//! Deterministic seed derivation.
//!
//! Every randomized routine takes a single `u64` seed. Work items (outer
//! Monte Carlo points, replications, `(n, rep)` cells of a study) get their
//! own sub-seed `derive_seed(seed, &[i, j, ...])`, so results do not depend
//! on thread count or scheduling.
//!
//! The derivation folds each coordinate into the state with the SplitMix64
//! finalizer: `h <- mix(h ^ mix(part + GOLDEN))`, starting from `mix(seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix(seed), |h, &p| mix(h ^ mix(p.wrapping_add(GOLDEN))))
}

/// The generator used by every sampling routine in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
