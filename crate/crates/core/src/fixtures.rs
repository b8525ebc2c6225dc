//! Deterministic model families used by the tests, the CLI and the guide.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Bond, Interaction, ModelError, ModelSpec};

/// Default seed for randomized fixtures.
pub const DEFAULT_SEED: u64 = 7;

/// Range of the random hopping magnitudes.
pub const HOP_RANGE: (f64, f64) = (0.5, 2.0);

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform ring: `|t| = 1`, no phases, `V = U = 0`.
pub fn uniform(sites: usize, particles: usize) -> Result<ModelSpec, ModelError> {
    ModelSpec::uniform(sites, particles)
}

/// Hopping magnitudes drawn uniformly from [`HOP_RANGE`], no phases,
/// `V = U = 0`.
pub fn random_hop(sites: usize, particles: usize, seed: u64) -> Result<ModelSpec, ModelError> {
    let mut r = rng(seed, 1);
    let mags: Vec<f64> = (0..sites)
        .map(|_| r.random_range(HOP_RANGE.0..HOP_RANGE.1))
        .collect();
    ModelSpec::from_magnitudes(&mags, particles)
}

/// Random on-site potential in `[-amplitude, amplitude]`.
pub fn random_potential(sites: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, 2);
    (0..sites)
        .map(|_| r.random_range(-amplitude..=amplitude))
        .collect()
}

/// Random hopping phases in `[0, 2pi)`.
pub fn random_phases(sites: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, 3);
    (0..sites)
        .map(|_| r.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

/// Random hoppings, potential of amplitude `v_amp` and site-independent `u`.
pub fn random_model(
    sites: usize,
    particles: usize,
    v_amp: f64,
    u: f64,
    seed: u64,
) -> Result<ModelSpec, ModelError> {
    random_hop(sites, particles, seed)?
        .with_potential(random_potential(sites, v_amp, seed))?
        .with_interaction(Interaction::Finite(vec![u; sites]))
}

/// Five-site half-filled ring with one strong bond and a matching potential
/// barrier; as `t` grows the two sites across the strong bond freeze out
/// and the rest behaves like a four-site ring with five particles.
pub fn remark5(t: f64) -> Result<ModelSpec, ModelError> {
    let mags = [1.0, SQRT_2, t, SQRT_2, 1.0];
    let bonds = mags.iter().map(|&m| Bond::new(m, 0.0)).collect();
    ModelSpec::new(
        5,
        bonds,
        vec![0.0, 0.0, t, t, 0.0],
        Interaction::Finite(vec![0.0; 5]),
    )
}

/// Free four-site ring with five particles.
pub fn remark5_effective() -> Result<ModelSpec, ModelError> {
    ModelSpec::uniform(4, 5)
}

/// [`random_hop`] repeated twice around a ring of twice the length.
pub fn extended(sites: usize, particles: usize, seed: u64) -> Result<ModelSpec, ModelError> {
    random_hop(sites, particles, seed)?.extend_ring(2)
}
