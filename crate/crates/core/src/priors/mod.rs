//! Priors exposed through their proximal mappings.

mod denoiser;
mod tv;

pub use denoiser::{Denoiser, DenoiserPrior};
pub use tv::{tv_prox, tv_value, TvConfig, TvPrior, MAX_DEFAULT_RHO, TV_EXTENSION_FACTOR};

use crate::error::{Error, Result};
use crate::solvers::cg::conjugate_gradient;
use crate::tikhonov::L2Prior;
use crate::Vector;

/// Iteration cap for the CG path of [`l2_prox`].
pub const L2_PROX_MAX_ITERS: usize = 2000;
/// Relative residual tolerance for the CG path of [`l2_prox`].
pub const L2_PROX_TOL: f64 = 1e-12;

/// `z ↦ argmin_x ½‖z − x‖² + t·s(x)` for some prior `s`.
pub trait ProximalPrior: Send + Sync {
    fn prox(&self, z: &Vector, t: f64) -> Result<Vector>;

    /// `s(x)` when the prior has an explicit form.
    fn value(&self, x: &Vector) -> Option<f64>;

    fn name(&self) -> String;
}

/// `s = 0`; the prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPrior;

impl ProximalPrior for ZeroPrior {
    fn prox(&self, z: &Vector, _t: f64) -> Result<Vector> {
        Ok(z.clone())
    }

    fn value(&self, _x: &Vector) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        "none".into()
    }
}

/// Solves `(I + t·DᵀD)x = z`, by Fourier division when `DᵀD` is circulant.
pub fn l2_prox(z: &Vector, t: f64, prior: &L2Prior) -> Result<Vector> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("prox scale must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(z.clone());
    }
    match prior {
        L2Prior::Identity => Ok(z / (1.0 + t)),
        L2Prior::FiniteDifference { shape, .. } => {
            let symbol = prior.fourier_symbol(*shape).expect("finite differences are circulant");
            let inverse: Vec<f64> = symbol.into_iter().map(|g| 1.0 / (1.0 + t * g)).collect();
            crate::error::check_len(shape.len(), z.len())?;
            Ok(Vector::from_vec(crate::linops::Fft2::new(*shape).filter_real(z.as_slice(), &inverse)))
        }
        _ => {
            let apply = |x: &Vector| -> Result<Vector> {
                let mut out = prior.apply_dtd(x)? * t;
                out += x;
                Ok(out)
            };
            let outcome = conjugate_gradient(apply, z, z, L2_PROX_MAX_ITERS, L2_PROX_TOL)?;
            if !outcome.converged {
                return Err(Error::Convergence {
                    iterations: outcome.iterations,
                    residual: outcome.residuals.last().copied().unwrap_or(f64::NAN),
                });
            }
            Ok(outcome.solution)
        }
    }
}

impl ProximalPrior for L2Prior {
    fn prox(&self, z: &Vector, t: f64) -> Result<Vector> {
        l2_prox(z, t, self)
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        L2Prior::value(self, x).ok()
    }

    fn name(&self) -> String {
        self.label().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::Shape;
    use nalgebra::DMatrix;

    #[test]
    fn identity_prior_shrinks() {
        let z = Vector::from_vec(vec![2.0, -4.0]);
        assert_eq!(l2_prox(&z, 1.0, &L2Prior::Identity).unwrap(), z / 2.0);
        assert_eq!(l2_prox(&Vector::from_vec(vec![2.0]), 0.0, &L2Prior::Identity).unwrap()[0], 2.0);
    }

    #[test]
    fn fourier_and_cg_paths_agree() {
        let shape = Shape::new(4, 6);
        let z = Vector::from_iterator(24, (0..24).map(|i| (i as f64 * 0.9).cos() * 3.0));
        let fd = L2Prior::finite_difference(shape);
        let mut dense = DMatrix::zeros(24, 24);
        for j in 0..24 {
            let mut e = Vector::zeros(24);
            e[j] = 1.0;
            dense.set_column(j, &fd.apply_dtd(&e).unwrap());
        }
        let cg = l2_prox(&z, 2.5, &L2Prior::dense(dense).unwrap()).unwrap();
        let fourier = l2_prox(&z, 2.5, &fd).unwrap();
        assert!((cg - fourier).amax() < 1e-9);
    }
}
