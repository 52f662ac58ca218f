use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tikhonov::NoiseSpec;
use crate::Vector;

/// Adds i.i.d. Gaussian noise; returns the noisy vector and the noise
/// standard deviation actually used.
pub fn add_noise(clean: &Vector, noise: &NoiseSpec, seed: u64) -> Result<(Vector, f64)> {
    let sigma = noise.resolve(clean);
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise level resolved to {sigma}")));
    }
    if sigma == 0.0 {
        return Ok((clean.clone(), 0.0));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((clean.map(|v| v + normal.sample(&mut rng)), sigma))
}
