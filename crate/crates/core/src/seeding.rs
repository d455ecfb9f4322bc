//! Deterministic random streams.
//!
//! Every random number in the crate comes from a [`ChaCha8Rng`]. A stream is
//! identified by the master seed and a 64-bit stream id:
//!
//! ```text
//! rng = ChaCha8Rng::seed_from_u64(master)
//! rng.set_stream((purpose << 56) | index)
//! ```
//!
//! `seed_from_u64` expands the seed with PCG32 as documented by `rand_core`,
//! and ChaCha8 is a portable, platform-independent generator, so a given
//! `(master, purpose, index)` triple yields the same sequence everywhere.
//!
//! For KMC replicas the index packs the sample index and the logic input
//! combination: `index = sample_index * 4 + input`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. The discriminant is part of the
/// stream id and must never change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// Dopant placement and disorder energies.
    Device = 0,
    /// Control-voltage draws of the global hypercube sweep.
    ControlVoltages = 1,
    /// KMC replicas of the global sweep.
    Kmc = 2,
    /// Control-voltage draws of a local hypervolume estimate.
    LocalVoltages = 3,
    /// KMC replicas of a local hypervolume estimate.
    LocalKmc = 4,
    /// Free-standing KMC runs (oracle checks, tests).
    Standalone = 5,
}

const INDEX_MASK: u64 = (1 << 56) - 1;

/// Returns the generator for `(master, purpose, index)`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index <= INDEX_MASK, "stream index overflows 56 bits");
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((purpose as u64) << 56) | (index & INDEX_MASK));
    rng
}

/// Stream index of the KMC replica for `sample_index` and input combination
/// `input` (0..4, ordered 00, 10, 01, 11).
#[inline]
pub fn replica_index(sample_index: u64, input: usize) -> u64 {
    sample_index * 4 + input as u64
}
