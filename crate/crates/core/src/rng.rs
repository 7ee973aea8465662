//! Seed mixing and random streams.
//!
//! Every random stream in the crate is a ChaCha8 generator. Per-vertex clock
//! streams share one key derived from the master seed and are separated by
//! the ChaCha stream id `(vertex << 2) | lane`, so the stream of a vertex does
//! not depend on how many other vertices exist. Replica seeds are
//! `mix2(master, replica)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn mix2(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(17) ^ 0xD1B5_4A32_D192_ED03)
}

/// Seed of replica `index` under `master`.
#[inline]
pub fn replica_seed(master: u64, index: u64) -> u64 {
    mix2(master, index)
}

/// Stream lanes within a vertex.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Heal = 0,
    Infect = 1,
    Mark = 2,
}

/// Counter-based stream for one (vertex, lane) pair.
pub fn vertex_stream(seed: u64, vertex: u32, lane: Lane) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    rng.set_stream(((vertex as u64) << 2) | lane as u64);
    rng
}

pub fn replica_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_seed(master, index))
}

/// Uniform in the open interval (0, 1).
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential variate with the given rate.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open01(rng).ln() / rate
}

/// Uniform index in `0..n` by multiply-shift. Bias is below `n / 2^64`.
#[inline]
pub fn index_below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

/// Bernoulli trial with success probability `p`.
#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    open01(rng) < p
}

/// Deterministic uniform mark in (0, 1) for a hashed key.
#[inline]
pub fn hashed_unit(key: u64) -> f64 {
    ((mix64(key) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
