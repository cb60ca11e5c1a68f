//! Seeded random number generation.
//!
//! Every stochastic routine takes a `u64` seed. Work split into independent
//! units (trials, chains) draws from a ChaCha stream selected by the unit
//! index, so a serial loop and a parallel map see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for work unit `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal deviate (Box-Muller).
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    crate::math::sqrt(-2.0 * crate::math::ln(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}
