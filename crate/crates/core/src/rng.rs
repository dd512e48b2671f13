//! Random number plumbing shared by every Monte Carlo routine.
//!
//! Replicate `i` of a run with master seed `s` is driven by its own
//! Xoshiro256++ stream seeded with [`replicate_seed`]`(s, i)`. Results are
//! therefore a function of `(s, i)` only and do not depend on how replicates
//! are scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

pub type SimRng = Xoshiro256PlusPlus;

/// SplitMix64 finaliser: a bijective 64-bit avalanche mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`: `mix64(master ^ mix64(index + golden))`.
#[inline]
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

pub fn rng_for(master: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(replicate_seed(master, index))
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential waiting time by inversion, `-ln(1 - U) / rate`.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -(1.0 - uniform(rng)).ln() / rate
}

#[inline]
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Runs `f(i, rng_i)` for replicates `start..start + count` and returns the
/// results in index order.
pub fn replicates<T, F>(master: u64, start: u64, count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync + Send,
{
    (start..start + count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(master, i);
            f(i, &mut rng)
        })
        .collect()
}
