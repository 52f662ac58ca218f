use crate::error::{check_len, Error, Result};
use crate::linops::{SpectralCoefficients, SpectralDecomposition};
use crate::Vector;

/// Conditional MSE of an estimator split into squared bias and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MseBreakdown {
    /// Includes the null-space energy `Σ_{i>m} [Vᵀx]ᵢ²`.
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    /// `(bias², variance)` for each singular direction `i < m`.
    pub per_index: Option<Vec<(f64, f64)>>,
}

impl MseBreakdown {
    fn from_terms(terms: Vec<(f64, f64)>, null_energy: f64) -> Self {
        let bias_sq = terms.iter().map(|t| t.0).sum::<f64>() + null_energy;
        let variance = terms.iter().map(|t| t.1).sum::<f64>();
        Self { bias_sq, variance, mse: bias_sq + variance, per_index: Some(terms) }
    }
}

fn validate(coeffs: &SpectralCoefficients, gamma_sq: &[f64], beta: f64, sigma_e: f64) -> Result<()> {
    check_len(coeffs.m(), gamma_sq.len())?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {beta}")));
    }
    if !(sigma_e >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_e must be >= 0, got {sigma_e}")));
    }
    if gamma_sq.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::InvalidArgument("gamma values must be positive".into()));
    }
    Ok(())
}

/// MSE of the LS Tikhonov estimator from spectral coefficients.
pub fn mse_ls(coeffs: &SpectralCoefficients, gamma_sq: &[f64], beta: f64, sigma_e: f64) -> Result<MseBreakdown> {
    validate(coeffs, gamma_sq, beta, sigma_e)?;
    let noise = sigma_e * sigma_e;
    let terms = (0..coeffs.m())
        .map(|i| {
            let (l, g, c) = (coeffs.lambda_sq[i], gamma_sq[i], coeffs.coeff_sq[i]);
            let denom = l + beta * g;
            let shrink = beta * g / denom;
            (shrink * shrink * c, noise * l / (denom * denom))
        })
        .collect();
    Ok(MseBreakdown::from_terms(terms, coeffs.null_energy))
}

/// MSE of the BP Tikhonov estimator; `eps > 0` uses the loaded pseudo-inverse.
pub fn mse_bp(coeffs: &SpectralCoefficients, gamma_sq: &[f64], beta: f64, sigma_e: f64, eps: f64) -> Result<MseBreakdown> {
    validate(coeffs, gamma_sq, beta, sigma_e)?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("loading eps must be >= 0, got {eps}")));
    }
    let noise = sigma_e * sigma_e;
    let terms = (0..coeffs.m())
        .map(|i| {
            let (l, g, c) = (coeffs.lambda_sq[i], gamma_sq[i], coeffs.coeff_sq[i]);
            let bg = beta * g;
            if eps == 0.0 {
                let denom = 1.0 + bg;
                let shrink = bg / denom;
                (shrink * shrink * c, noise / (l * denom * denom))
            } else {
                let loaded = l + eps;
                let a = l / loaded;
                let denom = a + bg;
                let shrink = bg / denom;
                (shrink * shrink * c, noise * (l / (loaded * loaded)) / (denom * denom))
            }
        })
        .collect();
    Ok(MseBreakdown::from_terms(terms, coeffs.null_energy))
}

pub fn mse_ls_analytic(
    spec: &SpectralDecomposition,
    x: &Vector,
    gamma_sq: &[f64],
    beta: f64,
    sigma_e: f64,
) -> Result<MseBreakdown> {
    mse_ls(&spec.coefficients(x)?, gamma_sq, beta, sigma_e)
}

pub fn mse_bp_analytic(
    spec: &SpectralDecomposition,
    x: &Vector,
    gamma_sq: &[f64],
    beta: f64,
    sigma_e: f64,
    eps: f64,
) -> Result<MseBreakdown> {
    mse_bp(&spec.coefficients(x)?, gamma_sq, beta, sigma_e, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(lambda: &[f64], c: &[f64], null_energy: f64) -> SpectralCoefficients {
        SpectralCoefficients {
            lambda_sq: lambda.iter().map(|l| l * l).collect(),
            coeff_sq: c.iter().map(|c| c * c).collect(),
            null_energy,
        }
    }

    #[test]
    fn unit_spectrum_matches_scalar_formula() {
        let c = coeffs(&[1.0; 3], &[1.0, -2.0, 0.5], 0.0);
        let beta = 0.7;
        let sigma = 1.3;
        let ls = mse_ls(&c, &[1.0; 3], beta, sigma).unwrap();
        let x_sq = 1.0 + 4.0 + 0.25;
        let shrink = beta / (1.0 + beta);
        assert!((ls.bias_sq - shrink * shrink * x_sq).abs() < 1e-14);
        assert!((ls.variance - 3.0 * sigma * sigma / (1.0 + beta).powi(2)).abs() < 1e-14);
        assert!((ls.mse - ls.bias_sq - ls.variance).abs() < 1e-15);
    }

    #[test]
    fn bp_bias_ignores_singular_values() {
        let c = coeffs(&[5.0, 0.3, 0.01], &[1.0, 2.0, 3.0], 0.0);
        let bp = mse_bp(&c, &[1.0; 3], 0.4, 0.0, 0.0).unwrap();
        let shrink = (0.4f64 / 1.4).powi(2);
        for (i, (b, v)) in bp.per_index.unwrap().into_iter().enumerate() {
            assert!((b - shrink * c.coeff_sq[i]).abs() < 1e-15);
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn null_energy_is_bias() {
        let c = coeffs(&[2.0], &[0.0], 3.5);
        assert_eq!(mse_ls(&c, &[1.0], 1.0, 0.0).unwrap().bias_sq, 3.5);
        assert_eq!(mse_bp(&c, &[1.0], 1.0, 0.0, 0.1).unwrap().bias_sq, 3.5);
    }

    #[test]
    fn small_loading_is_continuous() {
        let c = coeffs(&[3.0, 1.0, 0.2, 0.05], &[1.0, -1.0, 2.0, 0.3], 0.0);
        let g = [1.0, 2.0, 0.5, 4.0];
        let a = mse_bp(&c, &g, 0.3, 0.8, 0.0).unwrap().mse;
        let b = mse_bp(&c, &g, 0.3, 0.8, 1e-14).unwrap().mse;
        assert!(((a - b) / a).abs() <= 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = coeffs(&[1.0], &[1.0], 0.0);
        assert!(mse_ls(&c, &[1.0], 0.0, 0.0).is_err());
        assert!(mse_ls(&c, &[1.0, 1.0], 1.0, 0.0).is_err());
        assert!(mse_bp(&c, &[1.0], 1.0, 0.0, -1.0).is_err());
    }
}
