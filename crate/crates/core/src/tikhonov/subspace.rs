use std::ops::Range;

use super::mse::{mse_bp, mse_ls, MseBreakdown};
use crate::error::{Error, Result};
use crate::linops::SpectralDecomposition;
use crate::Vector;

/// Maximum coefficient left on a removed direction, relative to `‖x0‖`.
pub const SUBSPACE_RESIDUAL_TOL: f64 = 1e-10;

/// A subspace `𝒲` spanned by leading right singular vectors (0-based
/// column indices below `m`); the signal is constrained to `𝒲⊥`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceConstraint {
    indices: Vec<usize>,
}

impl SubspaceConstraint {
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("subspace indices must be distinct".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= m {
                return Err(Error::InvalidArgument(format!("subspace index {last} outside 0..{m}")));
            }
        }
        Ok(Self { indices })
    }

    pub fn range(columns: Range<usize>, m: usize) -> Result<Self> {
        Self::new(columns.collect(), m)
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Projects `x0` onto `𝒲⊥`.
    pub fn project(&self, spec: &SpectralDecomposition, x0: &Vector) -> Result<Vector> {
        if self.indices.is_empty() {
            return Ok(x0.clone());
        }
        let c = spec.real_coefficients(x0)?;
        let mut removed = Vector::zeros(c.len());
        for &i in &self.indices {
            removed[i] = c[i];
        }
        Ok(x0 - spec.synthesize(&removed)?)
    }
}

/// LS and BP (`ε = 0`) MSE of a signal constrained to `𝒲⊥`.
pub fn subspace_mse(
    spec: &SpectralDecomposition,
    x0: &Vector,
    constraint: &SubspaceConstraint,
    gamma_sq: &[f64],
    beta: f64,
    sigma_e: f64,
) -> Result<(MseBreakdown, MseBreakdown)> {
    let x = constraint.project(spec, x0)?;
    let mut coeffs = spec.coefficients(&x)?;
    let limit = SUBSPACE_RESIDUAL_TOL * x0.norm();
    for &i in constraint.indices() {
        if coeffs.coeff_sq[i].sqrt() > limit {
            return Err(Error::Numerical("projection left energy on a removed direction"));
        }
        coeffs.coeff_sq[i] = 0.0;
    }
    Ok((mse_ls(&coeffs, gamma_sq, beta, sigma_e)?, mse_bp(&coeffs, gamma_sq, beta, sigma_e, 0.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_constraint_is_unconstrained() {
        let spec = SpectralDecomposition::from_singular_values(vec![3.0, 1.0, 0.1], 5).unwrap();
        let x = Vector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 0.2]);
        let g = [1.0; 3];
        let (ls, bp) = subspace_mse(&spec, &x, &SubspaceConstraint::empty(), &g, 0.4, 0.3).unwrap();
        assert_eq!(ls, mse_ls(&spec.coefficients(&x).unwrap(), &g, 0.4, 0.3).unwrap());
        assert_eq!(bp, mse_bp(&spec.coefficients(&x).unwrap(), &g, 0.4, 0.3, 0.0).unwrap());
    }

    #[test]
    fn removed_directions_carry_no_bias() {
        let spec = SpectralDecomposition::from_singular_values(vec![3.0, 1.0, 0.1], 5).unwrap();
        let x = Vector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 0.2]);
        let w = SubspaceConstraint::range(0..2, 3).unwrap();
        let (ls, _) = subspace_mse(&spec, &x, &w, &[1.0; 3], 0.4, 0.0).unwrap();
        let terms = ls.per_index.unwrap();
        assert_eq!(terms[0].0, 0.0);
        assert_eq!(terms[1].0, 0.0);
        assert!(terms[2].0 > 0.0);
    }

    #[test]
    fn rejects_invalid_indices() {
        assert!(SubspaceConstraint::new(vec![1, 1], 4).is_err());
        assert!(SubspaceConstraint::new(vec![4], 4).is_err());
    }
}
