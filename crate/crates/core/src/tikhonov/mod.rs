//! Closed-form Tikhonov estimators for both fidelities, their analytic
//! bias/variance, and the comparisons between the two.

mod estimators;
mod gamma;
mod mse;
mod observations;
mod prior;
mod subspace;

pub use estimators::{
    solve_bp_closed, solve_ls_closed, SolvePath, TikhonovSolver, CLOSED_CG_MAX_ITERS, CLOSED_CG_TOL,
    DENSE_NORMAL_LIMIT,
};
pub use gamma::{gamma_from_prior, GammaEstimate, JOINT_DIAGONAL_TOL};
pub use mse::{mse_bp, mse_bp_analytic, mse_ls, mse_ls_analytic, MseBreakdown};
pub use observations::{
    check_observations, check_observations_coeffs, DirectionComparison, ObservationReport, SpectrumRegime,
};
pub use prior::{L2Prior, FD_LOADING, SPARSE_FD_STRIDE};
pub use subspace::{subspace_mse, SubspaceConstraint, SUBSPACE_RESIDUAL_TOL};

use crate::error::{Error, Result};

/// Observation noise: a standard deviation or a target SNR in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Sigma(f64),
    SnrDb(f64),
}

impl NoiseSpec {
    pub fn sigma(sigma_e: f64) -> Result<Self> {
        if !(sigma_e >= 0.0) || !sigma_e.is_finite() {
            return Err(Error::InvalidArgument(format!("noise sigma must be finite and >= 0, got {sigma_e}")));
        }
        Ok(Self::Sigma(sigma_e))
    }

    pub fn snr_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::InvalidArgument(format!("SNR must be finite, got {db}")));
        }
        Ok(Self::SnrDb(db))
    }

    /// Noise standard deviation for a clean observation vector.
    pub fn resolve(&self, clean: &crate::Vector) -> f64 {
        match *self {
            Self::Sigma(s) => s,
            Self::SnrDb(db) => (clean.norm_squared() / (clean.len() as f64 * 10f64.powf(db / 10.0))).sqrt(),
        }
    }
}
