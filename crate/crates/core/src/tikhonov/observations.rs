use super::mse::{mse_bp, mse_ls, MseBreakdown};
use crate::error::{Error, Result};
use crate::linops::{SpectralCoefficients, SpectralDecomposition};
use crate::Vector;

/// Relative slack for comparisons that are equalities in exact arithmetic.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumRegime {
    AllBelowOne,
    AllAboveOne,
    Mixed,
}

impl SpectrumRegime {
    pub fn of(lambda_sq: &[f64]) -> Self {
        if lambda_sq.iter().all(|&l| l < 1.0) {
            Self::AllBelowOne
        } else if lambda_sq.iter().all(|&l| l > 1.0) {
            Self::AllAboveOne
        } else {
            Self::Mixed
        }
    }
}

/// Per-direction comparison of bias and variance at a shared `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionComparison {
    pub index: usize,
    pub lambda: f64,
    pub bias_ls: f64,
    pub bias_bp: f64,
    pub var_ls: f64,
    pub var_bp: f64,
    /// BP has the smaller bias and larger variance when `λ < 1`, the
    /// reverse when `λ > 1`, and both estimators agree when `λ = 1`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationReport {
    pub directions: Vec<DirectionComparison>,
    pub directions_hold: bool,
    pub regime: SpectrumRegime,
    /// Noiseless MSE of both estimators at `beta_ls`.
    pub noiseless_ls: f64,
    pub noiseless_bp: f64,
    /// Ordering implied by the regime; `None` for a mixed spectrum.
    pub noiseless_ordering_holds: Option<bool>,
    pub beta_ls: f64,
    /// `β_LS / λ₁²`.
    pub matched_beta_bp: f64,
    /// In-range bias sums `Σ_{i≤m}` at `beta_ls` (LS) and `matched_beta_bp` (BP).
    pub matched_bias_ls: f64,
    pub matched_bias_bp: f64,
    pub matched_holds: bool,
    /// Whether some coefficient with `λᵢ < λ₁` is non-zero, making the
    /// matched comparison strict.
    pub matched_strict_expected: bool,
    pub matched_strict_holds: bool,
    /// Full MSE at the requested noise level for `beta_ls` and `beta_bp`.
    pub mse_ls: MseBreakdown,
    pub mse_bp: MseBreakdown,
}

impl ObservationReport {
    pub fn all_hold(&self) -> bool {
        self.directions_hold
            && self.noiseless_ordering_holds.unwrap_or(true)
            && self.matched_holds
            && (!self.matched_strict_expected || self.matched_strict_holds)
    }
}

fn in_range_bias(b: &MseBreakdown) -> f64 {
    b.per_index.as_ref().map(|t| t.iter().map(|t| t.0).sum()).unwrap_or(b.bias_sq)
}

/// Evaluates the three LS/BP comparisons for a signal `x` with spectral
/// coefficients `coeffs`.
pub fn check_observations_coeffs(
    coeffs: &SpectralCoefficients,
    gamma_sq: &[f64],
    beta_ls: f64,
    beta_bp: f64,
    sigma_e: f64,
) -> Result<ObservationReport> {
    let lambda_sq = &coeffs.lambda_sq;
    if lambda_sq.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("spectrum must be sorted in descending order".into()));
    }
    // Per-direction comparison at a shared β; unit noise makes variance
    // ordering visible even for a noiseless request.
    let probe_sigma = if sigma_e > 0.0 { sigma_e } else { 1.0 };
    let ls = mse_ls(coeffs, gamma_sq, beta_ls, probe_sigma)?;
    let bp = mse_bp(coeffs, gamma_sq, beta_ls, probe_sigma, 0.0)?;
    let directions: Vec<_> = ls
        .per_index
        .as_ref()
        .unwrap()
        .iter()
        .zip(bp.per_index.as_ref().unwrap())
        .enumerate()
        .map(|(i, (&(bias_ls, var_ls), &(bias_bp, var_bp)))| {
            let l = lambda_sq[i];
            let nonzero = coeffs.coeff_sq[i] > 0.0;
            let holds = if l < 1.0 {
                (if nonzero { bias_bp < bias_ls } else { bias_bp <= bias_ls }) && var_bp > var_ls
            } else if l > 1.0 {
                (if nonzero { bias_bp > bias_ls } else { bias_bp >= bias_ls }) && var_bp < var_ls
            } else {
                close(bias_bp, bias_ls) && close(var_bp, var_ls)
            };
            DirectionComparison { index: i, lambda: l.sqrt(), bias_ls, bias_bp, var_ls, var_bp, holds }
        })
        .collect();
    let directions_hold = directions.iter().all(|d| d.holds);

    let regime = SpectrumRegime::of(lambda_sq);
    let noiseless_ls = mse_ls(coeffs, gamma_sq, beta_ls, 0.0)?.mse;
    let noiseless_bp = mse_bp(coeffs, gamma_sq, beta_ls, 0.0, 0.0)?.mse;
    let any_signal = coeffs.coeff_sq.iter().any(|&c| c > 0.0);
    let noiseless_ordering_holds = match regime {
        SpectrumRegime::AllBelowOne if any_signal => Some(noiseless_bp < noiseless_ls),
        SpectrumRegime::AllAboveOne if any_signal => Some(noiseless_bp > noiseless_ls),
        SpectrumRegime::Mixed => None,
        _ => Some(close(noiseless_bp, noiseless_ls)),
    };

    let lambda_1 = lambda_sq[0];
    let matched_beta_bp = beta_ls / lambda_1;
    let matched_bias_ls = in_range_bias(&mse_ls(coeffs, gamma_sq, beta_ls, 0.0)?);
    let matched_bias_bp = in_range_bias(&mse_bp(coeffs, gamma_sq, matched_beta_bp, 0.0, 0.0)?);
    let matched_holds = matched_bias_bp <= matched_bias_ls * (1.0 + ROUNDING);
    let matched_strict_expected =
        lambda_sq.iter().zip(&coeffs.coeff_sq).any(|(&l, &c)| l < lambda_1 && c > 0.0);
    let matched_strict_holds = matched_bias_bp < matched_bias_ls;

    Ok(ObservationReport {
        directions,
        directions_hold,
        regime,
        noiseless_ls,
        noiseless_bp,
        noiseless_ordering_holds,
        beta_ls,
        matched_beta_bp,
        matched_bias_ls,
        matched_bias_bp,
        matched_holds,
        matched_strict_expected,
        matched_strict_holds,
        mse_ls: mse_ls(coeffs, gamma_sq, beta_ls, sigma_e)?,
        mse_bp: mse_bp(coeffs, gamma_sq, beta_bp, sigma_e, 0.0)?,
    })
}

pub fn check_observations(
    spec: &SpectralDecomposition,
    x: &Vector,
    gamma_sq: &[f64],
    beta_ls: f64,
    beta_bp: f64,
    sigma_e: f64,
) -> Result<ObservationReport> {
    check_observations_coeffs(&spec.coefficients(x)?, gamma_sq, beta_ls, beta_bp, sigma_e)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ROUNDING * a.abs().max(b.abs())
}
