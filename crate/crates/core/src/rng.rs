//! Seeded random streams.
//!
//! Every chain, replica group and trial owns a private generator derived from
//! a master seed and a stream index, so results never depend on scheduling.
//! The derivation is `SplitMix64(master ^ SplitMix64(index + GOLDEN))` fed to
//! `Xoshiro256PlusPlus::seed_from_u64`, which itself expands the 64-bit seed
//! with SplitMix64.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for every stochastic component.
pub type McRng = Xoshiro256PlusPlus;

/// Name recorded in output metadata.
pub const RNG_NAME: &str = "xoshiro256++ (SplitMix64 stream derivation)";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(GOLDEN)))
}

/// Generator for stream `index` under `master`.
pub fn stream_rng(master: u64, index: u64) -> McRng {
    McRng::seed_from_u64(derive_seed(master, index))
}

/// Derives a seed from a path of indices, e.g. `(trial, grid point, role)`.
pub fn derive_seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &i| derive_seed(acc, i))
}

pub fn seeded(seed: u64) -> McRng {
    McRng::seed_from_u64(seed)
}
