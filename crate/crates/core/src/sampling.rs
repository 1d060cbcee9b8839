//! Seed schedule and Gaussian draws.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by the user seed
//! and a tag path, so results never depend on thread scheduling.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{CMatrix, C64};

pub(crate) const TAG_NOISE: u64 = 0x6e6f697365;
pub(crate) const TAG_PRECODER: u64 = 0x7072656364;
pub(crate) const TAG_CHANNEL: u64 = 0x6368616e6e;
pub(crate) const TAG_ITERATION: u64 = 0x6974657261;
pub(crate) const TAG_EVAL: u64 = 0x6576616c75;
pub(crate) const TAG_IA: u64 = 0x69615f7365;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `seed` together with a tag path into a child seed.
pub fn substream_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |h, &t| splitmix64(h ^ splitmix64(t)))
}

pub fn rng_for(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, tags))
}

/// One circularly-symmetric complex Gaussian draw with unit variance.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

/// Channel draw number `draw` with i.i.d. `CN(0, 1)` entries, as
/// `blocks[rx][tx]` of shape `rx_antennas[rx] × tx_antennas[tx]`.
pub fn random_channel_blocks(seed: u64, draw: u64, tx_antennas: &[usize], rx_antennas: &[usize]) -> Vec<Vec<CMatrix>> {
    let mut rng = rng_for(seed, &[TAG_CHANNEL, draw]);
    rx_antennas
        .iter()
        .map(|&nr| {
            tx_antennas
                .iter()
                .map(|&nt| complex_normal_matrix(&mut rng, nr, nt))
                .collect()
        })
        .collect()
}

/// Receiver noise realizations `N_j^{(s)}`, `s = 0..samples`, flattened
/// sample-major (`samples × dim`).
///
/// The block depends only on `(seed, receiver)`, so every estimator that
/// looks at the same receiver with the same seed sees the same noise,
/// independent of transmit power and precoders.
pub fn noise_block(seed: u64, receiver: usize, samples: usize, dim: usize) -> Vec<C64> {
    let mut rng = rng_for(seed, &[TAG_NOISE, receiver as u64]);
    (0..samples * dim).map(|_| complex_normal(&mut rng)).collect()
}
