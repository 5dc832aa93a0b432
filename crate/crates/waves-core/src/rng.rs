//! Deterministic random-stream derivation.
//!
//! Every stochastic ingredient of a run (particle init, tomography shots,
//! resampling, probe evaluations) draws from its own ChaCha stream, keyed by
//! `(seed, step, index)` through a splitmix64-based mixer. Results are
//! therefore independent of evaluation order and of how work is split across
//! threads, and any run can be replayed exactly from its seed.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// Stream index for swarm initialization draws.
pub const STREAM_INIT: u64 = 1 << 32;
/// Stream index for posterior resampling draws.
pub const STREAM_RESAMPLE: u64 = (1 << 32) + 1;
/// Stream index for re-evaluating the objective at a posterior mean.
pub const STREAM_SCORE: u64 = (1 << 32) + 2;
/// Stream index for one-off probe evaluations (e.g. the excited-search
/// guess-state readout).
pub const STREAM_PROBE: u64 = (1 << 32) + 3;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with two coordinates into a stream key.
pub fn mix(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b)
}

/// The ChaCha stream for coordinate `(step, index)` under `seed`.
pub fn stream(seed: u64, step: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed, step, index))
}

/// Per-run seed for run `run_index` of a batch under `master` seed.
pub fn run_seed(master: u64, run_index: u64) -> u64 {
    mix(master, 0x52554e5f53454544, run_index)
}
