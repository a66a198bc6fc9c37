//! BPSK modulation, AWGN noise and floating-point LLR computation.
//!
//! Noise is drawn from per-frame ChaCha8 substreams keyed by
//! `(seed, frame_index)`, so a campaign produces identical samples whether
//! frames run sequentially or in parallel.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::code::Bit;

/// Name of the noise generator, recorded in campaign metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("code rate must lie in (0, 1], got {0}")]
    InvalidRate(f64),
}

/// One AWGN operating point: Eb/N0, rate, the derived noise deviation and
/// the campaign seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub ebn0_db: f64,
    pub rate: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn new(ebn0_db: f64, rate: f64, seed: u64) -> Result<Self, ChannelError> {
        let sigma = ebn0_to_sigma(ebn0_db, rate)?;
        Ok(ChannelSpec {
            ebn0_db,
            rate,
            sigma,
            seed,
        })
    }
}

/// Noise standard deviation for BPSK at the given Eb/N0 (dB) and code rate:
/// `sigma = sqrt(1 / (2 R 10^(EbN0/10)))` with unit symbol energy.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(ChannelError::InvalidRate(rate));
    }
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    Ok((1.0 / (2.0 * rate * ebn0)).sqrt())
}

/// BPSK mapping: bit 0 -> +1.0, bit 1 -> -1.0, so a positive LLR favors 0.
pub fn modulate(bits: &[Bit]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// In-place variant of [`modulate`] for hot loops.
pub fn modulate_into(bits: &[Bit], out: &mut Vec<f64>) {
    out.clear();
    out.extend(bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }));
}

/// The noise stream for one frame of a campaign.
pub fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    rng
}

/// Adds white Gaussian noise of deviation `sigma` to every sample.
pub fn add_noise<R: Rng>(samples: &mut [f64], sigma: f64, rng: &mut R) {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    for y in samples {
        let z: f64 = rng.sample(StandardNormal);
        *y += sigma * z;
    }
}

/// Channel LLR of one received sample: `2 y / sigma^2`.
///
/// Panics if `sigma` is not positive.
pub fn llr(y: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    2.0 * y / (sigma * sigma)
}
