use crate::error::{check_len, Result};
use crate::Vector;

/// Peak intensity of 8-bit images.
pub const PEAK: f64 = 255.0;

/// `‖x̂ − x‖² / n`.
pub fn mse(estimate: &Vector, truth: &Vector) -> Result<f64> {
    check_len(truth.len(), estimate.len())?;
    Ok((estimate - truth).norm_squared() / truth.len() as f64)
}

/// `10 log₁₀(255² / mse)` in dB; `+∞` when the images are identical.
pub fn psnr(estimate: &Vector, truth: &Vector) -> Result<f64> {
    Ok(psnr_from_mse(mse(estimate, truth)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}
