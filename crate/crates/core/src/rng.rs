//! Seed derivation and complex Gaussian sampling.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, domain)` and positioned on stream `index`. The mapping from the
//! triple to the generator state is injective, so distinct sub-seeds (retry
//! attempts, block indices, fading states) never share a stream.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::ComplexMatrix;

pub(crate) const DOMAIN_CHANNEL: u64 = 0x6368_616e_6e65_6c00; // "channel"
pub(crate) const DOMAIN_FADING_STATE: u64 = 0x6661_6469_6e67_0001;
pub(crate) const DOMAIN_BLOCK: u64 = 0x626c_6f63_6b00_0002;
pub(crate) const DOMAIN_SUBSET_SAMPLE: u64 = 0x7375_6273_6574_0003;
pub(crate) const DOMAIN_TRIAL: u64 = 0x7472_6961_6c00_0004;

/// Generator for stream `index` of the key `(seed, domain)`.
pub fn derive_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A fresh 64-bit seed drawn from stream `index` of `(seed, domain)`.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    derive_rng(seed, domain, index).next_u64()
}

/// Circularly symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. unit-variance complex Gaussian entries, row-major fill order.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_row_major(rows, cols, data).expect("gaussian samples are finite")
}
