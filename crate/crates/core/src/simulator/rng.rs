//! Seeded random streams.
//!
//! Every replication owns a ChaCha8 stream: the generator is seeded with
//! `seed_from_u64(master_seed)` and switched to stream number `replication`.
//! A uniform draw takes the top 53 bits of the next 64-bit output `w`,
//! `u = ((w >> 11) + 0.5) / 2^53`, which lies strictly inside (0, 1), and a
//! standard normal draw is the normal quantile of one uniform draw.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Stream reserved for synthetic schedules, disjoint from replication streams.
pub const SCHEDULE_STREAM: u64 = u64::MAX;

pub fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn uniform_open(rng: &mut impl RngCore) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(uniform_open(rng))
}
